"""Compiled and pure-Python kernels must agree with each other and the oracles."""
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from blockdiscrim import _backend

from oracles import central_chi2_cdf, ncx2_pdf_direct

GRID = np.array([1e-6, 1e-3, 0.1, 0.7, 2.0, 4.8, 11.0, 35.0, 120.0, 900.0])
PARAMS = [(1, 0.0), (2, 0.0), (3, 1.8), (5, 1.8), (6, 5.0), (1, 0.3), (3, 60.0), (8, 400.0)]


def test_backend_selected():
    assert _backend.BACKEND in ("cython", "python")


@pytest.mark.parametrize("dof,nc", PARAMS)
def test_logpdf_oracle(kernel, dof, nc):
    for u in (0.05, 4.8, 30.0):
        expected = ncx2_pdf_direct(u, dof, nc)
        assert math.exp(kernel.ncx2_logpdf(u, dof, nc)) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("dof,nc", PARAMS)
def test_backends_agree(dof, nc):
    from blockdiscrim import _kernels_py
    compiled = pytest.importorskip("blockdiscrim._kernels")
    np.testing.assert_allclose(
        compiled.ncx2_logpdf_array(GRID, dof, nc), _kernels_py.ncx2_logpdf_array(GRID, dof, nc), rtol=1e-13
    )
    np.testing.assert_allclose(
        compiled.ncx2_cdf_array(GRID, dof, nc), _kernels_py.ncx2_cdf_array(GRID, dof, nc), atol=1e-14
    )


@pytest.mark.parametrize("a,x", [(0.5, 1e-8), (0.5, 0.3), (1.5, 2.5), (3.0, 3.9), (3.0, 4.1), (40.0, 25.0), (40.0, 60.0)])
def test_gammainc(kernel, a, x):
    assert kernel.gammainc_lower(a, x) == pytest.approx(central_chi2_cdf(2 * x, 2 * a), abs=1e-14)


def test_special_points(kernel):
    assert kernel.ncx2_logpdf(0.0, 1, 0.0) == math.inf
    assert kernel.ncx2_logpdf(0.0, 2, 0.0) == pytest.approx(math.log(0.5))
    assert kernel.ncx2_logpdf(0.0, 3, 1.0) == -math.inf
    assert kernel.ncx2_cdf(0.0, 3, 1.0) == 0.0
    assert kernel.ncx2_cdf(math.inf, 3, 1.0) == 1.0


def test_array_shapes(kernel):
    u = np.linspace(0.1, 5, 12).reshape(3, 4)
    assert kernel.ncx2_logpdf_array(u, 3, 1.8).shape == (3, 4)
    assert kernel.ncx2_cdf_array(u, 3, 1.8).shape == (3, 4)


def test_environment_forces_pure_python():
    env = dict(os.environ, BLOCKDISCRIM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from blockdiscrim._backend import BACKEND; print(BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"

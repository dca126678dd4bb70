import sys
import importlib

import pytest

from blockdiscrim import _kernels_py


def _backends():
    mods = [_kernels_py]
    try:
        mods.append(importlib.import_module("blockdiscrim._kernels"))
    except ImportError:
        pass
    return mods


@pytest.fixture(params=_backends(), ids=lambda m: m.NAME)
def kernel(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

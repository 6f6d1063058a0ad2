import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from afspim import _pykernels  # noqa: E402

try:
    from afspim import _ckernels
except ImportError:  # pragma: no cover - extension not built
    _ckernels = None

KERNEL_MODULES = [pytest.param(_pykernels, id="numpy")]
KERNEL_MODULES.append(pytest.param(_ckernels, id="cython",
                                   marks=pytest.mark.skipif(_ckernels is None, reason="extension not built")))

ACCEPTANCE_RESULTS = {}


@pytest.fixture(params=KERNEL_MODULES)
def kernels(request):
    return request.param


@pytest.fixture(scope="session")
def acceptance_results():
    return ACCEPTANCE_RESULTS


@pytest.fixture
def rng():
    return np.random.default_rng(20211116)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=str):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")

import importlib
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))


def _available_backends():
    names = ["streetlabel._pykernels"]
    try:
        importlib.import_module("streetlabel._ckernels")
        names.append("streetlabel._ckernels")
    except ImportError:
        pass
    return names


BACKENDS = _available_backends()


@pytest.fixture(params=BACKENDS, ids=lambda n: n.rsplit("_", 1)[-1])
def kernels(request):
    return importlib.import_module(request.param)

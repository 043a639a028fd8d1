import os
import subprocess
import sys

import numpy as np
import pytest

from sqgpatch import _kernels_py, kernels
from sqgpatch.contour import Curve, circle, ellipse
from sqgpatch.errors import SingularityError

ck = pytest.importorskip("sqgpatch._ckernels")

NAMES = ["transport_remainder", "normal_remainder", "arc_chord_table", "arc_chord_sup", "offcurve_sum"]


def args_for(name, c):
    pts = np.array([[1.5, 0.2], [0.0, 0.0], [-2.0, 0.7]])
    f = np.vstack([c.tangent, np.cos(3 * np.linspace(-np.pi, np.pi, c.n, endpoint=False))])
    return {
        "transport_remainder": (c.pos, c.speed, f),
        "normal_remainder": (c.pos, c.speed, c.tangent, c.normal),
        "arc_chord_table": (c.pos, c.speed),
        "arc_chord_sup": (c.pos, c.speed),
        "offcurve_sum": (pts, c.pos, c.tangent),
    }[name]


@pytest.mark.parametrize("name", NAMES)
@pytest.mark.parametrize("n", [16, 64, 256])
def test_backends_agree(name, n):
    c = ellipse(1.0, 0.6, n).curve if n >= 64 else circle(1.0, n).curve
    a = np.asarray(getattr(_kernels_py, name)(*args_for(name, c)))
    b = np.asarray(getattr(ck, name)(*args_for(name, c)))
    assert a.shape == b.shape
    assert np.abs(a - b).max() <= 1e-13 * (1 + np.abs(a).max())


def test_coincident_nodes_both_backends():
    pos = circle(1.0, 32).pos.copy()
    pos[:, 3] = pos[:, 17]
    c = Curve(pos)
    f = np.ones((1, 32))
    for mod in (_kernels_py, ck):
        with pytest.raises(SingularityError):
            mod.transport_remainder(c.pos, c.speed, f)
        assert not np.isfinite(mod.arc_chord_sup(c.pos, c.speed))


def test_backend_selected():
    forced = os.environ.get("SQGPATCH_PURE_PYTHON", "") not in ("", "0")
    assert kernels.BACKEND == ("python" if forced else "cython")


def test_pure_python_override():
    env = dict(os.environ, SQGPATCH_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import sqgpatch; print(sqgpatch.BACKEND)"], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "python"

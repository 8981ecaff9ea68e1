"""The numba kernels and the plain-numpy fallback must agree."""
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from nvcdamage import _jit

PROBE = r"""
import json, numpy as np
from nvcdamage import _jit
from nvcdamage.driver import calibrated_gurson
from nvcdamage.gurson import PointState, stress_update
from nvcdamage.tensor import ElasticConstants
from nvcdamage.fem.mesh import build_round_bar_mesh
from nvcdamage.fem.mechanics import MechanicsSolver
from nvcdamage.fem.transport import TransportSolver
from nvcdamage.traps import TrapParams
p, e = calibrated_gurson(), ElasticConstants()
st = PointState.initial(p)
for _ in range(30):
    st, D = stress_update(st, [-3e-4, 2e-3, -3e-4, 1e-4], 40.0, p, e)
m = build_round_bar_mesh(1.5875e-3, 12.7e-3, 0.005, 3, 4)
z = np.zeros((m.n_elements, 4))
ms = MechanicsSolver(m, p, e)
for _ in range(5):
    F = ms.solve_increment(4e-3 * m.half_gage, z, z)
ts = TransportSolver(m, TrapParams())
h = ts.step(ts.initial_state(m.nodes, 31.5), ms.state.X, ms.state.sig[:, :, :3].sum(axis=2),
            ms.state.ep, 100.0)
print(json.dumps({"jit": _jit.USING_NUMBA, "sigma": st.sigma.tolist(), "D": D.tolist(),
                  "F": ms.reaction(F), "CL": h.C_L.tolist()}))
"""


def probe(disable: bool) -> dict:
    env = dict(os.environ)
    env["NVCDAMAGE_DISABLE_JIT"] = "1" if disable else "0"
    out = subprocess.run([sys.executable, "-c", PROBE], env=env, capture_output=True,
                         text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


@pytest.mark.skipif(_jit.JIT_DISABLED, reason="numba path not active")
def test_fallback_matches_compiled():
    fast, slow = probe(False), probe(True)
    assert fast["jit"] and not slow["jit"]
    np.testing.assert_allclose(fast["sigma"], slow["sigma"], rtol=1e-10)
    np.testing.assert_allclose(fast["D"], slow["D"], rtol=1e-8, atol=1e-6)
    assert fast["F"] == pytest.approx(slow["F"], rel=1e-9)
    np.testing.assert_allclose(fast["CL"], slow["CL"], rtol=1e-10)


def test_flag_parsing():
    for value, disabled in [("1", True), ("yes", True), ("0", False), ("", False)]:
        env = dict(os.environ, NVCDAMAGE_DISABLE_JIT=value)
        out = subprocess.run([sys.executable, "-c",
                              "from nvcdamage import _jit; print(_jit.JIT_DISABLED)"],
                             env=env, capture_output=True, text=True, check=True)
        assert out.stdout.strip() == str(disabled)

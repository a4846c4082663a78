"""Smoke test for the rsplab Python bindings.

Uses an installed `rsplab` if present, otherwise the library from
`cargo build -p rsplab-py` under target/{release,debug}.
"""

import json
import math
import os
import shutil
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def load():
    try:
        import rsplab  # noqa: F401

        return rsplab
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = os.path.join(ROOT, "target", profile, "librsplab_py.so")
        if os.path.exists(lib):
            tmp = tempfile.mkdtemp()
            shutil.copy(lib, os.path.join(tmp, "rsplab.so"))
            sys.path.insert(0, tmp)
            import rsplab

            return rsplab
    sys.exit("rsplab not installed and no cargo build found; run `cargo build -p rsplab-py`")


def main():
    rs = load()

    # teleportation: shift family, uniform probabilities
    for d in (2, 3):
        proto = rs.RspProtocol.shift_family(d)
        assert proto.n == d * d
        assert abs(proto.classical_cost - 2 * math.log2(d)) < 1e-12
        phi = rs.haar_random_state(d, seed=1)
        t = proto.run(phi, seed=2)
        assert t.fidelity >= 1 - 1e-9, t.fidelity
        assert 1 <= t.outcome <= d * d
        assert all(f >= 1 - 1e-9 for f in proto.branch_fidelities(phi) if f is not None)
        report = proto.bound_report()
        assert report["is_identity"] and report["trace_orthogonal"]
        assert rs.trace_orthogonality_defect(proto.unitaries()) < 1e-10

    # solver on the Pauli triple: infeasible for a generic state
    triple = rs.RspProtocol.pauli_family().unitaries()[:3]
    phi = rs.BlochVector(0.48, 0.6, 0.64).to_state()
    res = rs.solve_probabilities(triple, phi)
    assert res["status"] == "Infeasible", res
    assert len(res["minimizer"]) == 3
    scan = rs.feasibility_scan(triple, count=50, seed=3)
    assert scan["feasible_fraction"] == 0.0

    # equatorial protocol accepts the equator, refuses everything else
    eq = rs.RspProtocol.equatorial()
    on = rs.BlochVector(math.cos(0.4), math.sin(0.4), 0.0).to_state()
    assert eq.run(on, seed=0).classical_cost == 1.0
    try:
        eq.run(phi, seed=0)
    except rs.RspError as e:
        assert "sub-ensemble" in str(e)
    else:
        raise AssertionError("off-equator state accepted")
    assert rs.equator_demo(samples=20, seed=4)["passed"]

    # qubit n = 3 impossibility
    imp = rs.n3_impossibility_scan(count=100, seed=5)
    assert imp["passed"] and imp["infeasible"] == 100

    # states, operators and validation errors
    bell = rs.max_entangled(2).projector()
    marg = bell.partial_trace("B", 2, 2)
    assert abs(marg.purity() - 0.5) < 1e-12
    assert abs(bell.entropy()) < 1e-9 and abs(marg.entropy() - 1.0) < 1e-9
    x = rs.UnitaryOperator([[0, 1], [1, 0]])
    assert x.rotation()[1][1] == -1.0
    try:
        rs.UnitaryOperator([[1, 1], [0, 1]])
    except rs.RspError:
        pass
    else:
        raise AssertionError("non-unitary accepted")

    # family-file round trip
    text = rs.RspProtocol.shift_family(2).to_json()
    back = rs.RspProtocol.from_json(text)
    assert back.n == 4 and json.loads(text)["d"] == 2

    print("python smoke test: ok")


if __name__ == "__main__":
    main()

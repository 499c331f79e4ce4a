"""The verify suite itself: fresh state passes, corruption is caught."""

from janusmc.verify import ALL_CHECKS, run_verify


FAST_CHECKS = ["prng-recurrence", "table-constants", "amsc-lane-equivalence",
               "smsc-plane-equivalence", "grid-equivalence",
               "thermodynamic-identity", "snapshot-roundtrip"]


def test_fast_checks_pass():
    results = run_verify(FAST_CHECKS)
    assert len(results) == len(FAST_CHECKS)
    for r in results:
        assert r.passed, f"{r.name}: {r.detail}"


def test_check_names_unique():
    names = [name for name, _ in ALL_CHECKS]
    assert len(names) == len(set(names))


def test_corrupted_lane_engine_caught(monkeypatch):
    """Mutation check: a broken carry-save adder must fail the lane
    equivalence check by name."""
    import janusmc.bitslice as bitslice

    original = bitslice._csa_count6

    def broken(terms):
        hi, mid, lo = original(terms)
        return hi, mid, ~lo

    monkeypatch.setattr(bitslice, "_csa_count6", broken)
    results = run_verify(["amsc-lane-equivalence"])
    assert not results[0].passed


def test_crashing_check_reports_failure(monkeypatch):
    import janusmc.verify as verify_mod

    def boom():
        raise RuntimeError("synthetic crash")

    monkeypatch.setattr(verify_mod, "ALL_CHECKS",
                        (("boom", boom),) + verify_mod.ALL_CHECKS)
    results = run_verify(["boom"])
    assert not results[0].passed
    assert "RuntimeError" in results[0].detail

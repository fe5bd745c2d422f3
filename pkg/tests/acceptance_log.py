"""Per-criterion PASS/FAIL records collected by test_acceptance."""

RESULTS: dict[int, list[tuple[str, bool, str]]] = {}


def record(criterion: int, part: str, passed: bool, detail: str = "") -> bool:
    RESULTS.setdefault(criterion, []).append((part, bool(passed), detail))
    print(f"{'PASS' if passed else 'FAIL'} criterion {criterion} [{part}] {detail}")
    return bool(passed)


def summary() -> list[str]:
    out = []
    for n in sorted(RESULTS):
        parts = RESULTS[n]
        ok = all(p for _, p, _ in parts)
        failed = "; ".join(f"{name}: {d}" for name, p, d in parts if not p)
        out.append(f"{'PASS' if ok else 'FAIL'} criterion {n}" + (f" ({failed})" if failed else ""))
    return out

"""Collects acceptance results so the terminal summary can print one line per criterion."""

RESULTS = {}


def record(criterion, part, ok, detail):
    RESULTS.setdefault(criterion, []).append((part, bool(ok), detail))
    return ok


def summary_lines():
    lines = []
    for crit in sorted(RESULTS):
        parts = RESULTS[crit]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        body = "; ".join(f"{name} {'ok' if ok else 'FAIL'} ({detail})" for name, ok, detail in parts)
        lines.append(f"criterion {crit}: {status} | {body}")
    return lines

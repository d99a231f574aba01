"""Shared pass/fail log for the acceptance suite."""

LINES: list[str] = []


def record(tag: str, ok: bool, detail: str) -> str:
    line = f"ACCEPTANCE {tag}: {'PASS' if ok else 'FAIL'} | {detail}"
    LINES.append(line)
    return line

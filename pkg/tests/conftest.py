"""Collects acceptance outcomes and prints one line per criterion at the end of the run."""

_ACCEPTANCE: dict[str, list[tuple[bool, str]]] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            item.user_properties.append(("criterion", marker.args[0]))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    criterion = props.get("criterion")
    if criterion is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE.setdefault(criterion, []).append((report.outcome == "passed", props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: int(k[1:])):
        results = _ACCEPTANCE[key]
        outcome = "PASS" if all(ok for ok, _ in results) else "FAIL"
        details = "; ".join(d for _, d in results if d)
        terminalreporter.write_line(f"{key} {outcome}  {details}")

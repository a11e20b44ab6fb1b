"""One test per acceptance criterion, run at full level."""

import pytest

from gtlab import acceptance


@pytest.mark.parametrize("name", list(acceptance._CRITERIA))
def test_criterion(name):
    result = acceptance._CRITERIA[name]("full")
    assert result["passed"], result


def test_run_suite_schema():
    report = acceptance.run_suite("fast")
    assert report["schema"] == "gtlab-acceptance/1"
    assert report["level"] == "fast"
    assert [c["id"] for c in report["criteria"]] == [
        f"a{i}" for i in range(1, 13)]
    assert report["passed"] == all(c["passed"] for c in report["criteria"])

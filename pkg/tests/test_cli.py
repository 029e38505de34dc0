import textwrap
from pathlib import Path

import pytest

from mwcoh.cli import ParseError, main, parse_jobs, run_job

TORUS = """\
[job]
command = cohomology
[presentation]
kind = Torus
n = 1
[connection]
kind = trivial
"""


def write(tmp_path, text, name="job.job"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return str(p)


def test_torus_job_reports_dlog(tmp_path, capsys):
    assert main(["--job", write(tmp_path, TORUS)]) == 0
    out = capsys.readouterr().out
    assert "dims" in out and "1 1" in out
    assert "dx/x" in out
    assert "status: pass" in out


def test_machine_format(tmp_path, capsys):
    assert main(["--job", write(tmp_path, TORUS), "--format", "machine"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[:3] == ["[report]", "command = cohomology", "status = pass"]
    assert "dims = 1 1" in lines
    assert "basis.H1.1 = dx/x" in lines


def test_homotopy_job(tmp_path, capsys):
    job = """\
    [job]
    command = homotopy
    [homotopy]
    degree = 8
    count = 3
    """
    assert main(["--job", write(tmp_path, job)]) == 0
    assert "3/3 identities pass" in capsys.readouterr().out


def test_parse_error_has_line_and_column(tmp_path, capsys):
    bad = "[job]\ncommand = cohomology\n[presentation\n"
    assert main(["--job", write(tmp_path, bad)]) == 2
    assert "line 3, column 1" in capsys.readouterr().err


def test_bad_integer_points_at_value():
    text = TORUS + "[truncation]\nd = 16\nN = twenty\nn = 3\nn_jet = 4\nk_max = 2\n"
    job = parse_jobs(text)[0]
    rep = run_job(job)
    assert rep.status == 2
    err = dict(rep.results)["error"]
    assert "line 10" in err and "column 5" in err


def test_partial_truncation_is_rejected():
    job = parse_jobs(TORUS + "[truncation]\nd = 16\n")[0]
    assert run_job(job).status == 2


def test_unknown_command():
    with pytest.raises(ParseError):
        parse_jobs("[job]\ncommand = frobnicate\n")


def test_not_stabilized_exit_code(tmp_path):
    job = """\
    [job]
    command = cohomology
    [presentation]
    kind = HyperellipticAffine
    f = -1:1 1:3
    [connection]
    kind = trivial
    """
    assert main(["--job", write(tmp_path, job), "--truncation-sweep", "4,5", "--quiet"]) == 3


def test_output_file_written(tmp_path):
    path = write(tmp_path, TORUS.replace("command = cohomology", "command = cohomology\noutput = torus.out"))
    assert main(["--job", path, "--quiet"]) == 0
    assert "dx/x" in (tmp_path / "torus.out").read_text()


def test_several_jobs_take_worst_status(tmp_path):
    text = TORUS + "[job]\ncommand = cohomology\n[presentation]\nkind = Torus\n[connection]\nkind = kummer\na = 1/0\n"
    assert main(["--job", write(tmp_path, text), "--quiet"]) == 2


def test_missing_file_is_input_error(tmp_path):
    assert main(["--job", str(tmp_path / "nope.job"), "--quiet"]) == 2


def test_shipped_jobs_pass():
    assert main(["--job", str(Path(__file__).parents[1] / "jobs" / "all.job"), "--quiet"]) == 0

import json
import subprocess
import sys

import pytest

from treesat import __version__
from treesat.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# --- documented examples -------------------------------------------------------------

def test_oracle_la_star_prints_six(capsys):
    assert run(capsys, "oracle", "--n", "4", "--poset", "chain2.poset", "--what", "la-star")[:2] == (0, "6\n")


def test_count_free_prints_twenty(capsys):
    assert run(capsys, "count-free", "--n", "3", "--poset", "chain2.poset")[:2] == (0, "20\n")


def test_random_turan_degenerate_rows(capsys):
    code, out, _ = run(capsys, "random-turan", "--n", "4", "--p", "1", "--trials", "3",
                       "--poset", "chain2.poset", "--seed", "7")
    lines = out.splitlines()
    assert code == 0 and lines[0].startswith("# ")
    assert lines[1] == "seed,n,p,sample_size,la_star,exact_flag,millis"
    assert lines[2:] == ["7,4,1,16,6,true,"] * 3


def test_other_oracles(capsys):
    assert run(capsys, "oracle", "--n", "2", "--poset", "chain2", "--what", "copies")[1] == "5\n"
    assert run(capsys, "oracle", "--n", "4", "--poset", "chain2", "--what", "mstar", "--q", "2")[1] == "12\n"
    assert run(capsys, "oracle", "--n", "4", "--poset", "chain2", "--what", "rank-bound", "--q", "2")[1] == "24\n"


def test_supersat_on_middle_levels(capsys):
    code, out, _ = run(capsys, "supersat", "--n", "5", "--poset", "chain2")
    assert code == 0 and json.loads(out)["ratio"] in ("1", 1)


def test_balanced_replay_passes(capsys):
    code, out, _ = run(capsys, "balanced", "--n", "4", "--poset", "chain2", "--delta", "1/2")
    data = json.loads(out)
    assert code == 0 and data["caps"] == [2, 1] and data["replay_audit"] == "pass"
    assert data["frontier_violations"] == 0


def test_clean_and_embed_run(capsys, tmp_path):
    code, out, _ = run(capsys, "clean", "--n", "4", "--q", "2", "--delta", "0.25", "--poset", "chain2")
    assert code == 0 and "T_sizes" in json.loads(out)
    dump = tmp_path / "emb.jsonl"
    code, out, _ = run(capsys, "embed", "--n", "4", "--poset", "V", "--dump", str(dump))
    assert code == 0 and json.loads(out)["total_embeddings"] == len(dump.read_text().splitlines()) > 0


def test_family_file_input(capsys, tmp_path):
    fam = tmp_path / "f.fam"
    fam.write_text("n=3\n{}\n{1}\n{1,2}\n{2}\n")
    assert run(capsys, "oracle", "--family", str(fam), "--poset", "chain2", "--what", "la-star")[1] == "2\n"


# --- exit codes ----------------------------------------------------------------------

@pytest.mark.parametrize("argv", [
    ["random-turan", "--n", "4", "--p", "3/2", "--trials", "1", "--poset", "chain2"],
    ["oracle", "--n", "4", "--poset", "no-such-poset", "--what", "copies"],
    ["count-free", "--poset", "chain2"],
    ["clean", "--n", "4", "--q", "2"],
    ["clean", "--n", "4", "--q", "2", "--delta", "2"],
])
def test_invalid_input_exits_one(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1 and "invalid input" in err


def test_unparsable_rational_exits_one(capsys):
    with pytest.raises(SystemExit) as info:
        main(["random-turan", "--n", "4", "--p", "half", "--trials", "1", "--poset", "chain2"])
    assert info.value.code == 1


@pytest.mark.parametrize("argv", [
    ["clean", "--n", "9", "--q", "2", "--delta", "1/2"],
    ["count-free", "--n", "6", "--poset", "chain2"],
])
def test_cap_abort_exits_two(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "cap exceeded" in err


def test_error_names_the_parameter(capsys):
    _, _, err = run(capsys, "random-turan", "--n", "4", "--p", "3/2", "--trials", "1", "--poset", "chain2")
    assert "--p" in err


# --- reproducibility -----------------------------------------------------------------

@pytest.mark.parametrize("argv", [
    ["clean", "--n", "4", "--q", "2", "--delta", "1/3", "--poset", "chain2"],
    ["balanced", "--n", "4", "--poset", "chain2", "--delta", "1/2"],
    ["supersat", "--n", "4", "--poset", "V", "--sample", "1/2", "--seed", "3"],
    ["oracle", "--n", "4", "--poset", "chain3", "--what", "la-star"],
])
def test_json_outputs_are_byte_identical_and_headed(capsys, tmp_path, argv):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()
    hdr = json.loads(a.read_text())["header"]
    assert hdr["version"] == __version__ and hdr["config"]["command"] == argv[0]
    assert "started" not in hdr


def test_csv_identical_across_thread_counts(capsys, tmp_path):
    base = ["random-turan", "--n", "5", "--p", "1/2", "--trials", "4", "--poset", "V", "--seed", "11"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    sa, sb = tmp_path / "a.json", tmp_path / "b.json"
    assert main(base + ["--threads", "1", "--out", str(a), "--summary", str(sa)]) == 0
    assert main(base + ["--threads", "2", "--out", str(b), "--summary", str(sb)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert sa.read_bytes() == sb.read_bytes()
    hdr = json.loads(a.read_text().splitlines()[0][2:])
    assert hdr["config"]["p"] == "1/2" and "threads" not in hdr["config"]


def test_timing_adds_header_field(capsys, tmp_path):
    out = tmp_path / "c.json"
    assert main(["count-free", "--n", "2", "--poset", "chain2", "--out", str(out), "--timing"]) == 0
    assert "started" in json.loads(out.read_text())["header"]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "treesat", "count-free", "--n", "2", "--poset", "chain2"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == "6\n"

import json
import struct

import pytest

from lcsketch.cli import CliError, main, parse_script, read_symbols


@pytest.fixture(scope="module")
def keys(tmp_path_factory):
    d = tmp_path_factory.mktemp("keys")
    path = d / "keys.bin"
    assert main(["genkeys", "--n", "256", "--k", "3", "--seed", "1", "-o", str(path)]) == 0
    other = d / "other.bin"
    assert main(["genkeys", "--n", "256", "--k", "3", "--seed", "2", "-o", str(other)]) == 0
    return path, other


def write(tmp_path, name, data):
    p = tmp_path / name
    p.write_bytes(data)
    return str(p)


def sketch(keys, src, out, copies=3):
    return main(["sketch", "--keys", str(keys), src, "--copies", str(copies), "-o", out])


def test_compare_same_file_is_zero(keys, tmp_path, capsys):
    src = write(tmp_path, "x.txt", b"the quick brown fox")
    assert sketch(keys[0], src, str(tmp_path / "a.lcs")) == 0
    assert sketch(keys[0], src, str(tmp_path / "b.lcs")) == 0
    capsys.readouterr()
    assert main(["compare", str(tmp_path / "a.lcs"), str(tmp_path / "b.lcs")]) == 0
    assert capsys.readouterr().out.strip() == "0"


def test_compare_reports_distance_and_far(keys, tmp_path, capsys):
    sketch(keys[0], write(tmp_path, "x", b"kitten"), str(tmp_path / "x.lcs"))
    sketch(keys[0], write(tmp_path, "y", b"sitting"), str(tmp_path / "y.lcs"))
    sketch(keys[0], write(tmp_path, "z", b"a completely different line"), str(tmp_path / "z.lcs"))
    capsys.readouterr()
    assert main(["compare", str(tmp_path / "x.lcs"), str(tmp_path / "y.lcs"), "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out) == {"distance": 3, "copies": 3}
    assert main(["compare", str(tmp_path / "x.lcs"), str(tmp_path / "z.lcs")]) == 1
    assert capsys.readouterr().out.strip() == "INF"


def test_mismatched_bundles_exit_2(keys, tmp_path, capsys):
    src = write(tmp_path, "x", b"hello")
    sketch(keys[0], src, str(tmp_path / "a.lcs"))
    sketch(keys[1], src, str(tmp_path / "b.lcs"))
    assert main(["compare", str(tmp_path / "a.lcs"), str(tmp_path / "b.lcs")]) == 2
    assert "different bundles" in capsys.readouterr().err
    assert main(["compare", str(tmp_path / "a.lcs"), str(tmp_path / "missing.lcs")]) == 2


def test_roll_script(keys, tmp_path, capsys):
    script = tmp_path / "s.txt"
    script.write_text(
        "A 'the kitten'\n"
        "R 't'\nR 'h'\nR 'e'\nR 32   # drop the prefix\n"
        "SNAP x\n"
        "A 's'\nR 'k'\n"
        "SNAP y\n"
        "CMP x x\nCMP x y\n"
    )
    assert main(["roll", "--keys", str(keys[0]), str(script), "--copies", "3"]) == 0
    assert capsys.readouterr().out.splitlines() == ["CMP x x 0", "CMP x y 2"]


def test_roll_kitten_sitting(keys, tmp_path, capsys):
    script = tmp_path / "s.txt"
    lines = ["A 'kitten'", "SNAP x"]
    lines += ["R " + str(ord(c)) for c in "kitten"]
    lines += ["A 'sitting'", "SNAP y", "CMP x y"]
    script.write_text("\n".join(lines) + "\n")
    assert main(["--format", "json", "roll", "--keys", str(keys[0]), str(script)]) == 0
    assert json.loads(capsys.readouterr().out) == [{"line": 11, "a": "x", "b": "y", "distance": 3}]


def test_roll_errors(keys, tmp_path, capsys):
    script = tmp_path / "s.txt"
    script.write_text("A 'ab'\nR 'b'\n")
    assert main(["roll", "--keys", str(keys[0]), str(script)]) == 2
    assert "line 2" in capsys.readouterr().err
    script.write_text("CMP a b\n")
    assert main(["roll", "--keys", str(keys[0]), str(script)]) == 2


def test_parse_script_rejects_bad_lines():
    with pytest.raises(CliError):
        parse_script("A 300\n")
    with pytest.raises(CliError):
        parse_script("JUMP 1\n")
    with pytest.raises(CliError):
        parse_script("CMP a\n")
    assert [op.op for op in parse_script("# only a comment\nA 1\nsnap s\n")] == ["A", "SNAP"]


def test_decompose_prints_grammars(keys, tmp_path, capsys):
    src = write(tmp_path, "x", b"abababab")
    assert main(["decompose", "--keys", str(keys[0]), src]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 1 and out[0].startswith("# ")


def test_u32_input(tmp_path):
    data = struct.pack("<I", 3) + struct.pack("<3I", 1, 70000, 5)
    assert read_symbols(write(tmp_path, "u", data), u32=True) == [1, 70000, 5]
    with pytest.raises(CliError):
        read_symbols(write(tmp_path, "v", data[:-1]), u32=True)


def test_genkeys_rejects_bad_params(tmp_path, capsys):
    assert main(["genkeys", "--n", "8", "--k", "9", "--seed", "1", "-o", str(tmp_path / "k")]) == 2
    assert "error" in capsys.readouterr().err


def test_bad_bundle_file(tmp_path):
    bad = write(tmp_path, "bad.bin", b"not a bundle")
    assert main(["decompose", "--keys", bad, bad]) == 2

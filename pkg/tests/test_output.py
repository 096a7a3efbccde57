import pytest

from barload.errors import SchemaVersionError
from barload.models import RunConfig, load_config
from barload.output import extract_echo, read_table, write_table


def test_table_round_trip(tmp_path):
    cfg = RunConfig()
    path = write_table(tmp_path / "t.csv", "scan", ["a", "b", "ok"], [[0.1, 2, True]], cfg.to_yaml(), seed=5)
    table = read_table(path)
    assert table.kind == "scan" and table.seed == 5 and table.version == 1
    assert table.rows == [{"a": "0.10000000000000001", "b": "2", "ok": "1"}]
    assert table.column("a") == [0.1]


def test_config_reloads_from_table(tmp_path):
    cfg = RunConfig().with_overrides(seed=17)
    path = write_table(tmp_path / "t.csv", "load", ["x"], [], cfg.to_yaml(), seed=17)
    assert load_config(path) == cfg
    assert extract_echo(path.read_text()) == cfg.to_yaml()


def test_unknown_version_rejected(tmp_path):
    path = write_table(tmp_path / "t.csv", "scan", ["x"], [[1.0]], RunConfig().to_yaml(), seed=0)
    text = path.read_text().replace(" v1 ", " v2 ", 1)
    path.write_text(text)
    with pytest.raises(SchemaVersionError):
        read_table(path)


def test_foreign_file_rejected(tmp_path):
    path = tmp_path / "plain.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(SchemaVersionError):
        read_table(path)

import json
import logging

import numpy as np
import pytest

from indii.core.errors import ParameterError, RankDeficiency, UsageError
from indii.utils.env_loader import get_section, load_config, merge_config
from indii.utils.io import dump_json, to_jsonable, write_resolved_config
from indii.utils.linalg import check_full_column_rank, projector, require_positive_definite, sym_sqrt
from indii.utils.logger import setup_logging


def test_load_config_substitutes_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("INDII_TEST_DIR", "/tmp/indii")
    path = tmp_path / "config.yml"
    path.write_text("app:\n  output_dir: ${INDII_TEST_DIR}/runs\n  other: ${INDII_UNDEFINED_VAR}\n"
                    "estimation:\n  bounds:\n    - ${INDII_TEST_DIR}\n", encoding="utf-8")
    config = load_config(path)
    assert config["app"]["output_dir"] == "/tmp/indii/runs"
    assert config["app"]["other"] == "${INDII_UNDEFINED_VAR}"
    assert config["estimation"]["bounds"] == ["/tmp/indii"]


@pytest.mark.parametrize("text", ["- 1\n- 2\n", "a: [1, 2\n"])
def test_load_config_rejects_bad_documents(tmp_path, text):
    path = tmp_path / "bad.yml"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(UsageError):
        load_config(path)
    with pytest.raises(UsageError):
        load_config(tmp_path / "missing.yml")


def test_merge_config_ignores_none():
    base = {"estimation": {"H": 10, "grid": {"points": 11, "sweeps": 3}}}
    merged = merge_config(base, {"estimation": {"H": None, "grid": {"points": 21}}, "seed": 4})
    assert merged == {"estimation": {"H": 10, "grid": {"points": 21, "sweeps": 3}}, "seed": 4}
    assert base["estimation"]["grid"]["points"] == 11


def test_get_section():
    assert get_section({}, "logging") == {}
    assert get_section({"logging": None}, "logging") == {}
    with pytest.raises(UsageError):
        get_section({"logging": [1, 2]}, "logging")


def test_json_output(tmp_path):
    payload = {"value": np.float64(np.nan), "matrix": np.eye(2), "flag": np.bool_(True), "names": ("a", "b")}
    document = json.loads(dump_json(payload))
    assert document["schema_version"] == "1.0"
    assert document["value"] is None
    assert document["matrix"] == [[1.0, 0.0], [0.0, 1.0]]
    assert document["flag"] is True
    assert to_jsonable({"x": np.int64(3)}) == {"x": 3}
    assert write_resolved_config(tmp_path / "out", {"seed": np.int64(1)}).name == "config_resolved.yml"


def test_linear_algebra_helpers():
    matrix = np.array([[4.0, 1.0], [1.0, 3.0]])
    root, _ = sym_sqrt(matrix)
    np.testing.assert_allclose(root @ root, matrix, atol=1e-12)
    inv_root, _ = sym_sqrt(matrix, inverse=True)
    np.testing.assert_allclose(inv_root @ matrix @ inv_root, np.eye(2), atol=1e-12)

    x = np.array([[1.0], [1.0], [0.0]])
    P = projector(x)
    np.testing.assert_allclose(P @ P, P, atol=1e-12)
    np.testing.assert_allclose(P @ x, x, atol=1e-12)

    with pytest.raises(ParameterError):
        require_positive_definite(np.array([[1.0, 2.0], [2.0, 1.0]]), "W")
    check_full_column_rank(np.eye(3)[:, :2], "I")
    with pytest.raises(RankDeficiency) as info:
        check_full_column_rank(np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [0.0, 0.0, 0.0]]), "M")
    assert info.value.columns == [2]


def test_setup_logging_with_file(tmp_path):
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    try:
        log_file = tmp_path / "logs" / "indii.log"
        setup_logging({"level": "WARNING", "file": str(log_file)})
        assert root.level == logging.WARNING
        logging.getLogger("indii.test").warning("写入日志文件")
        for handler in root.handlers:
            handler.flush()
        assert "写入日志文件" in log_file.read_text(encoding="utf-8")

        setup_logging({"level": "ERROR"}, verbosity=1)
        assert root.level == logging.DEBUG
    finally:
        for handler in root.handlers:
            handler.close()
        root.handlers[:] = handlers
        root.setLevel(level)

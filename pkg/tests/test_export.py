"""보고서 파일 쓰기 테스트"""

import json

import pytest

from app.services import export
from app.services.errors import ExportError
from app.services.export import resolve_output_dir, write_json, write_text


class TestWriteText:
    """임시 파일 + 원자적 교체"""

    def test_writes_and_creates_parent(self, tmp_path):
        target = tmp_path / "nested" / "out.txt"
        write_text(target, "hello")
        assert target.read_text(encoding="utf-8") == "hello"
        assert [path.name for path in target.parent.iterdir()] == ["out.txt"]

    def test_failed_replace_leaves_no_temp_file(self, tmp_path, monkeypatch):
        """교체 실패 시 임시 파일 정리"""

        def broken_replace(src, dst):
            raise OSError("disk full")

        monkeypatch.setattr(export.os, "replace", broken_replace)
        with pytest.raises(ExportError) as caught:
            write_text(tmp_path / "out.txt", "hello")
        assert caught.value.to_payload()["error"] == "Export"
        assert list(tmp_path.iterdir()) == []

    def test_json_is_sorted(self, tmp_path):
        path = write_json(tmp_path / "a.json", {"b": 1, "a": 2})
        text = path.read_text(encoding="utf-8")
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": 2, "b": 1}


class TestOutputDir:
    def test_explicit_wins(self, tmp_path, monkeypatch):
        monkeypatch.setenv("OUTPUT_DIR", str(tmp_path / "env"))
        assert resolve_output_dir(tmp_path / "flag") == tmp_path / "flag"

    def test_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("OUTPUT_DIR", str(tmp_path / "env"))
        assert resolve_output_dir() == tmp_path / "env"
        assert (tmp_path / "env").is_dir()

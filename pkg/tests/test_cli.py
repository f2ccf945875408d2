import json
import subprocess
import sys
from pathlib import Path

import pytest

from procflow.cli import main

FIXTURES = Path(__file__).parent / "fixtures" / "rules"
DEFS = Path(__file__).parent.parent / "src" / "procflow" / "definitions"


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestValidate:
    def test_valid_definition_exits_zero(self, capsys):
        code, out, err = run_cli(["validate", str(DEFS / "tms_navigation.hfsm")], capsys)
        assert code == 0
        assert out.strip() == "OK"

    def test_broken_definition_exits_one_and_prints_rule(self, capsys):
        code, out, err = run_cli(
            ["validate", str(FIXTURES / "r1_child_state_without_reinit.hfsm")], capsys
        )
        assert code == 1
        assert "R1" in out

    def test_jsonl_format(self, capsys):
        code, out, _ = run_cli(
            ["validate", "--format", "jsonl", str(FIXTURES / "r2_sco_without_signal.hfsm")],
            capsys,
        )
        assert code == 1
        findings = [json.loads(line) for line in out.strip().splitlines()]
        assert any(f["rule"] == "R2" for f in findings)

    def test_missing_path_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["validate", "/nonexistent/definitely.hfsm"])
        assert exc.value.code == 2

    def test_parse_error_reported(self, tmp_path, capsys):
        bad = tmp_path / "bad.hfsm"
        bad.write_text("workflow w\nbranch ???\n")
        code, out, err = run_cli(["validate", str(bad)], capsys)
        assert code == 1
        assert "procflow: error:" in err


class TestFlatten:
    def test_flatten_core_prints_eight_states(self, capsys):
        code, out, err = run_cli(["flatten", str(DEFS / "tms_core.hfsm")], capsys)
        assert code == 0
        assert "8 states" in err
        assert "workflow tms_core_flat" in out

    def test_cap_enforced(self, capsys, tmp_path):
        lines = ["workflow big"]
        for i in range(6):
            lines += [
                f"branch b{i} level 1 start 0", "state 0", "state 1",
                f"op s{i} kind SCO from 0 to 1", f"op c{i} kind SCO from 1 to 0",
            ]
        path = tmp_path / "big.hfsm"
        path.write_text("\n".join(lines) + "\n")
        code, _, err = run_cli(["flatten", str(path), "--cap", "10"], capsys)
        assert code == 1
        assert "cap" in err


class TestRunAndInject:
    def test_control_run_exits_zero(self, capsys):
        code, out, _ = run_cli(
            ["run", "--scenario", "TMS", "--seed", "3", "--format", "csv"], capsys
        )
        assert code == 0
        assert "N/A" in out

    def test_inject_missing_landmark(self, capsys):
        code, out, _ = run_cli(
            [
                "inject", "--scenario", "Fem", "--seed", "3",
                "--fault", "missing-landmark", "--landmark", "2", "--format", "csv",
            ],
            capsys,
        )
        assert code == 0
        assert "100->110" in out
        assert "Digitized Landmarks (110)" in out

    def test_inject_large_error(self, capsys):
        code, out, _ = run_cli(
            [
                "inject", "--scenario", "TMS", "--seed", "4", "--fault", "large-error",
                "--landmark", "1", "--axis", "x", "--offset", "25", "--format", "csv",
            ],
            capsys,
        )
        assert code == 0
        assert "Registered Landmark (111)" in out

    def test_inject_bad_index_fails(self, capsys):
        code, _, err = run_cli(
            [
                "inject", "--scenario", "Fem", "--fault", "missing-landmark",
                "--landmark", "9",
            ],
            capsys,
        )
        assert code == 1
        assert "out of range" in err


class TestSuite:
    def test_twenty_row_csv(self, capsys, tmp_path):
        out_path = tmp_path / "table.csv"
        code, _, _ = run_cli(["suite", "--format", "csv", "--out", str(out_path)], capsys)
        assert code == 0
        lines = out_path.read_text().strip().splitlines()
        assert len(lines) == 21

    def test_stdout_stable_under_fixed_seed(self):
        cmd = [sys.executable, "-m", "procflow.cli", "suite", "--seed", "11", "--format", "csv"]
        a = subprocess.run(cmd, capture_output=True, text=True, check=True)
        b = subprocess.run(cmd, capture_output=True, text=True, check=True)
        assert a.stdout == b.stdout
        assert len(a.stdout.strip().splitlines()) == 21

    def test_jsonl_round_trips_through_report(self, capsys, tmp_path):
        jsonl = tmp_path / "runs.jsonl"
        code, _, _ = run_cli(
            ["suite", "--seed", "5", "--format", "jsonl", "--out", str(jsonl)], capsys
        )
        assert code == 0
        code, out, _ = run_cli(
            ["report", "--input", str(jsonl), "--format", "csv"], capsys
        )
        assert code == 0
        assert len(out.strip().splitlines()) == 21
        assert "Registered Landmark (111)" in out


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["definitely-not-a-command"])
    assert exc.value.code == 2


class TestServe:
    def test_serve_reads_endpoints_from_config_file(self, tmp_path):
        import json as _json
        import re
        import signal
        import socket
        import time

        cfg = tmp_path / "serve.json"
        cfg.write_text(_json.dumps({
            "scenario": "TMS", "seed": 5,
            "port": 0, "bridge_port": 0, "snapshot_ms": 20,
        }))
        proc = subprocess.Popen(
            [sys.executable, "-m", "procflow.cli", "serve", "--config", str(cfg)],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
        )
        try:
            line = proc.stdout.readline()
            match = re.search(r"udp 127\.0\.0\.1:(\d+), bridge 127\.0\.0\.1:(\d+)", line)
            assert match, line
            bridge_port = int(match.group(2))
            with socket.create_connection(("127.0.0.1", bridge_port), timeout=5) as sock:
                sock.settimeout(5)
                data = b""
                while b"\n" not in data:
                    data += sock.recv(65536)
            snapshot = json.loads(data.split(b"\n")[0])
            assert snapshot["branches"]["registration"]["digits"] == "000"
        finally:
            proc.send_signal(signal.SIGTERM)
            out, _ = proc.communicate(timeout=10)
            assert "engine stopped" in line + out

import pytest

from exokit import ExoDaemon, load_config, two_arm_default
from exokit.cli import _parse_endpoint, _parse_script, main


@pytest.fixture()
def lockstep_daemon():
    d = ExoDaemon(two_arm_default(calibrated=True), listen=("127.0.0.1", 0))
    d.start()
    yield d
    d.stop()


def addr_of(d):
    return f"{d.address[0]}:{d.address[1]}"


class TestEndpointParsing:
    def test_valid(self):
        assert _parse_endpoint("127.0.0.1:7070") == ("127.0.0.1", 7070)
        assert _parse_endpoint("box.lan:1") == ("box.lan", 1)

    def test_invalid(self):
        for text in ("nope", ":7070", "host:", "host:abc"):
            with pytest.raises(SystemExit):
                _parse_endpoint(text)


class TestScriptParsing:
    def test_comments_and_blanks_are_skipped(self):
        steps = _parse_script([
            "# warmup routine",
            "",
            "   ",
            "moveto R.elbow abs 40 1 30",
            "wait 500",
            "wait_done",
        ])
        assert [(k, t) for _, k, t in steps] == [
            ("cmd", "moveto R.elbow abs 40 1 30"),
            ("wait", "500"),
            ("wait_done", ""),
        ]
        assert [n for n, _, _ in steps] == [4, 5, 6]

    def test_whole_file_validates_before_running(self):
        with pytest.raises(SystemExit, match="script line 2"):
            _parse_script(["status", "moveto R.elbow abs", "panic"])

    def test_wait_validation(self):
        with pytest.raises(SystemExit, match="script line 1"):
            _parse_script(["wait"])
        with pytest.raises(SystemExit, match="bad duration"):
            _parse_script(["wait soon"])
        with pytest.raises(SystemExit, match="negative"):
            _parse_script(["wait -5"])

    def test_wait_done_arity(self):
        with pytest.raises(SystemExit, match="at most one id"):
            _parse_script(["wait_done 3 4"])


class TestDryRun:
    def test_prints_plan_without_connecting(self, tmp_path, capsys):
        script = tmp_path / "s.exo"
        script.write_text("# plan\nstatus\nwait 100\nwait_done\n")
        # endpoint is a dead port; dry run must never touch it
        code = main(["run", str(script), "--connect", "127.0.0.1:9",
                     "--dry-run"])
        assert code == 0
        out = capsys.readouterr().out
        assert out.splitlines() == ["2: status", "3: wait 100", "4: wait_done"]

    def test_missing_script_file(self, tmp_path, capsys):
        code = main(["run", str(tmp_path / "absent.exo"), "--dry-run"])
        assert code == 2
        assert "cannot read" in capsys.readouterr().err


class TestRun:
    def test_scripted_session_transcript(self, tmp_path, capsys,
                                         lockstep_daemon):
        script = tmp_path / "session.exo"
        script.write_text(
            "# raise the right elbow\n"
            "moveto R.elbow abs 60 1 45\n"
            "wait_done\n"
            "sense R.elbow\n"
            "wait 200\n"
            "status\n"
        )
        code = main(["run", str(script), "--connect",
                     addr_of(lockstep_daemon)])
        assert code == 0
        out = capsys.readouterr().out.splitlines()
        assert "> moveto R.elbow abs 60 1 45" in out
        assert "done" in out
        sense_line = out[out.index("> sense R.elbow") + 1]
        assert abs(float(sense_line.split()[1]) - 60.0) <= 1.0
        # the trailing wait advanced the lockstep clock by exactly 20 ticks
        status_line = out[out.index("> status") + 1]
        assert "mode=lockstep" in status_line

    def test_wait_steps_exact_ticks_in_lockstep(self, tmp_path, capsys,
                                                lockstep_daemon):
        script = tmp_path / "s.exo"
        script.write_text("wait 500\nstatus\n")
        main(["run", str(script), "--connect", addr_of(lockstep_daemon)])
        out = capsys.readouterr().out
        assert "t=500 " in out

    def test_error_stops_script_with_nonzero_exit(self, tmp_path, capsys,
                                                  lockstep_daemon):
        script = tmp_path / "bad.exo"
        script.write_text(
            "moveto R.elbow abs 999 1 30\n"
            "panic\n"          # must never be reached
        )
        code = main(["run", str(script), "--connect",
                     addr_of(lockstep_daemon)])
        assert code == 1
        captured = capsys.readouterr()
        assert "err TARGET_OUT_OF_RANGE elbow max 115" in captured.out
        assert "stopped at line 1" in captured.err
        assert "> panic" not in captured.out

    def test_wait_done_with_no_action_yet(self, tmp_path, capsys,
                                          lockstep_daemon):
        script = tmp_path / "s.exo"
        script.write_text("wait_done\n")
        code = main(["run", str(script), "--connect",
                     addr_of(lockstep_daemon)])
        assert code == 0
        assert "no action issued yet" in capsys.readouterr().out

    def test_bad_endpoint_exits(self, tmp_path):
        script = tmp_path / "s.exo"
        script.write_text("status\n")
        with pytest.raises(SystemExit, match="bad endpoint"):
            main(["run", str(script), "--connect", "garbage"])


class TestInitConfig:
    def test_writes_loadable_config(self, tmp_path, capsys):
        path = tmp_path / "rig.exo"
        assert main(["init-config", str(path)]) == 0
        assert capsys.readouterr().out.strip() == str(path)
        config = load_config(path)
        assert len(config.joints) == 6
        assert not config.is_calibrated(config.joint_ids()[0])

    def test_calibrated_flag(self, tmp_path):
        path = tmp_path / "rig.exo"
        main(["init-config", str(path), "--calibrated"])
        config = load_config(path)
        assert all(config.is_calibrated(j) for j in config.joint_ids())

    def test_daemon_accepts_config_path(self, tmp_path):
        path = tmp_path / "rig.exo"
        main(["init-config", str(path), "--calibrated"])
        d = ExoDaemon(str(path), listen=("127.0.0.1", 0))
        d.start()
        try:
            assert d.controller.config.is_calibrated(
                d.controller.config.joint_ids()[0])
        finally:
            d.stop()


class TestReportCommand:
    def _make_log(self, tmp_path):
        log = tmp_path / "run.log"
        d = ExoDaemon(two_arm_default(calibrated=True),
                      listen=("127.0.0.1", 0), log_path=str(log))
        d.start()
        try:
            import socket
            s = socket.create_connection(d.address, timeout=5)
            fh = s.makefile("rw", newline="\n")
            assert fh.readline().strip() == "proto v1"

            def send(line):
                fh.write(line + "\n")
                fh.flush()
                while True:
                    got = fh.readline().strip()
                    if not got.startswith("T "):
                        return got

            send("stream on R.elbow,L.elbow 80")
            send("moveto R.elbow abs 60 1 45")
            send("step 150")
            s.close()
        finally:
            d.stop()
        return log

    def test_renders_csv_and_figures(self, tmp_path, capsys):
        log = self._make_log(tmp_path)
        code = main(["report", str(log)])
        assert code == 0
        written = capsys.readouterr().out.splitlines()
        assert written, "report printed no output files"
        names = [p.rsplit("/", 1)[-1] for p in written]
        assert "telemetry.csv" in names
        assert "summary.csv" in names
        assert "R_elbow.png" in names
        assert "L_elbow.png" in names
        from pathlib import Path
        for p in written:
            assert Path(p).is_file()
        telemetry = next(p for p in written if p.endswith("telemetry.csv"))
        header = Path(telemetry).read_text().splitlines()[0]
        assert header == ("t_ms,joint,angle_deg,velocity_deg_s,"
                          "accel_deg_s2,torque_nm,load_nm")

    def test_out_dir_override(self, tmp_path, capsys):
        log = self._make_log(tmp_path)
        out = tmp_path / "figures"
        assert main(["report", str(log), "--out-dir", str(out)]) == 0
        printed = capsys.readouterr().out
        assert str(out) in printed
        assert (out / "telemetry.csv").is_file()

    def test_missing_log_fails_cleanly(self, tmp_path, capsys):
        code = main(["report", str(tmp_path / "absent.log")])
        assert code == 1
        assert "report failed" in capsys.readouterr().err


class TestRepl:
    def test_scripted_repl_session(self, monkeypatch, capsys,
                                   lockstep_daemon):
        lines = iter(["status", "  ", "quit"])
        monkeypatch.setattr("builtins.input", lambda prompt="": next(lines))
        code = main(["repl", "--connect", addr_of(lockstep_daemon)])
        assert code == 0
        out = capsys.readouterr().out
        assert "proto v1" in out
        assert "ok mode=lockstep" in out

    def test_eof_ends_session(self, monkeypatch, capsys, lockstep_daemon):
        def raise_eof(prompt=""):
            raise EOFError
        monkeypatch.setattr("builtins.input", raise_eof)
        assert main(["repl", "--connect", addr_of(lockstep_daemon)]) == 0

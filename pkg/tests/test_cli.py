import json
import subprocess
import sys

import numpy as np
import pytest

from ds1.cli import (
    PRESETS,
    RunConfig,
    TwoPhaseConfig,
    load_config,
    main,
    save_config,
)
from ds1.evolution import EvolutionConfig
from ds1.reference import InitialDataKind, InitialDataSpec


def tiny_config(tmp_path, **overrides):
    base = dict(
        scenario="tiny",
        n_xi=128, n_eta=128, l_xi=4.0, l_eta=4.0,
        initial=InitialDataSpec(InitialDataKind.GAUSSIAN, 1.2),
        evolution=EvolutionConfig(t_max=0.05, n_steps=30, record_every=3,
                                  snapshot_times=(0.05,), checkpoint_every=10),
        out_dir=str(tmp_path),
    )
    base.update(overrides)
    return RunConfig(**base)


class TestConfig:
    def test_roundtrip(self, tmp_path):
        cfg = tiny_config(tmp_path)
        p = tmp_path / "config.json"
        save_config(cfg, p)
        back = load_config(p)
        assert back == cfg
        assert back.config_hash == cfg.config_hash

    def test_hash_sensitivity(self, tmp_path):
        a = tiny_config(tmp_path)
        b = tiny_config(tmp_path, n_xi=256)
        assert a.config_hash != b.config_hash

    def test_presets_complete(self):
        expected = {"selftest", "stationary", "qorbit", "drom09", "dromgauss",
                    "drom11", "drom11_ci", "gauss3", "gauss45"}
        assert expected <= set(PRESETS)
        assert PRESETS["drom11"].n_xi == 4096
        assert PRESETS["drom11"].two_phase.enabled
        assert PRESETS["gauss45"].l_xi == 10.0
        for cfg in PRESETS.values():
            # every preset round-trips through its JSON form
            assert RunConfig.from_dict(json.loads(
                json.dumps(cfg.to_dict()))) == cfg


class TestSelftest:
    def test_passes_at_default_resolution(self, capsys):
        assert main(["selftest", "--n", "512"]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 3

    def test_underresolved_sech_fails(self, capsys):
        assert main(["selftest", "--n", "256"]) != 0
        out = capsys.readouterr().out
        assert "FAIL" in out

    def test_bad_flags_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["selftest", "--grid", "weird"])
        assert exc.value.code == 2

    def test_unknown_scenario_rejected(self):
        with pytest.raises(SystemExit):
            main(["scenario", "not-a-scenario"])


class TestEvolveCommand:
    def test_end_to_end_with_config_file(self, tmp_path, capsys):
        cfg = tiny_config(tmp_path)
        p = tmp_path / "cfg.json"
        save_config(cfg, p)
        assert main(["evolve", "--config", str(p)]) == 0
        out_dir = tmp_path / "tiny"
        assert (out_dir / "norms.csv").exists()
        assert (out_dir / "manifest.json").exists()
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["config_hash"] == cfg.config_hash
        assert manifest["termination"] == "completed"
        snaps = list(out_dir.glob("snap_*.ds1f"))
        assert len(snaps) == 1

    def test_cross_process_determinism(self, tmp_path):
        cfg = tiny_config(tmp_path)
        save_config(cfg, tmp_path / "cfg.json")
        outputs = []
        for sub in ("r1", "r2"):
            subprocess.run(
                [sys.executable, "-m", "ds1.cli", "evolve",
                 "--config", str(tmp_path / "cfg.json"),
                 "--out", str(tmp_path / sub)],
                check=True, capture_output=True,
            )
            outputs.append((tmp_path / sub / "tiny" / "norms.csv").read_bytes())
        assert outputs[0] == outputs[1]

    def test_resume_equivalence_via_cli(self, tmp_path):
        cfg = tiny_config(tmp_path)
        save_config(cfg, tmp_path / "cfg.json")
        args = ["evolve", "--config", str(tmp_path / "cfg.json")]
        assert main(args + ["--out", str(tmp_path / "golden")]) == 0
        # simulate an interrupted run: keep files up to the checkpoint
        assert main(args + ["--out", str(tmp_path / "broken")]) == 0
        broken = tmp_path / "broken" / "tiny"
        (broken / "norms.csv").unlink()
        (broken / "checkpoint_00000030.ds1f").unlink()  # resume from step 20
        for snap in broken.glob("snap_*.ds1f"):
            snap.unlink()
        (broken / "last_good.ds1f").unlink(missing_ok=True)
        assert main(args + ["--out", str(tmp_path / "broken"), "--resume"]) == 0
        golden = tmp_path / "golden" / "tiny"
        assert (golden / "norms.csv").read_bytes() == (broken / "norms.csv").read_bytes()
        for snap in golden.glob("snap_*.ds1f"):
            assert snap.read_bytes() == (broken / snap.name).read_bytes()

    def test_requires_config_or_preset(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["evolve"])
        assert exc.value.code == 2


class TestFitCommand:
    def test_fit_on_dispersing_record(self, tmp_path, capsys):
        from ds1.evolution import EvolutionRecord, write_record_csv

        rec = EvolutionRecord()
        t = np.linspace(0.0, 1.0, 200)
        rec.times = list(t)
        rec.linf_psi = list(2.0 * np.exp(-t))
        rec.l2_psi_sq = [1.0] * 200
        rec.l2_grad_xi = [1.0] * 200
        rec.l2_grad_eta = [1.0] * 200
        rec.energy = [0.0] * 200
        rec.delta = [-12.0] * 200
        p = tmp_path / "norms.csv"
        write_record_csv(p, rec)
        assert main(["fit", str(p)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["classification"] == "dispersing"
        assert (tmp_path / "fits.json").exists()


class TestStationaryCommand:
    def test_writes_q_and_manifest(self, tmp_path, capsys):
        cfg = RunConfig(
            scenario="stat_tiny",
            n_xi=512, n_eta=512, l_xi=10.0, l_eta=10.0,
            initial=InitialDataSpec(InitialDataKind.SCALED_DROMION_RADIATING, 6.0),
            out_dir=str(tmp_path),
        )
        save_config(cfg, tmp_path / "cfg.json")
        assert main(["stationary", "--config", str(tmp_path / "cfg.json")]) == 0
        out = tmp_path / "stat_tiny"
        assert (out / "Q.ds1f").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        info = manifest["stationary"]
        assert info["M_Q"] == pytest.approx(21.7656, abs=1e-3)
        assert info["residual"] < 1e-10
        assert info["localization_fit_residual"] < 0.05


class TestCompareProfileCommand:
    def test_profile_of_q_against_itself(self, tmp_path, capsys, tier_q):
        from ds1.snapshot import write_snapshot

        q_path = tmp_path / "Q.ds1f"
        write_snapshot(q_path, tier_q.Q.as_complex(), 0.0)
        snap_path = tmp_path / "state.ds1f"
        write_snapshot(snap_path, tier_q.Q.as_complex(), 2.5)
        assert main(["compare-profile", str(snap_path), str(q_path)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["L"] == pytest.approx(1.0, abs=1e-10)
        assert out["max_residual_fraction"] < 1e-4
        assert out["time"] == 2.5
        assert (tmp_path / "profile.json").exists()
        assert (tmp_path / "profile_residual.ds1f").exists()

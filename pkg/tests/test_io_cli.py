"""File formats and the command-line front end."""

import json

import numpy as np
import pytest

from fiberphoton import io as fio
from fiberphoton.cli import main
from fiberphoton.correlate import CoincidenceHistogram, make_edges
from fiberphoton.emitter import EmitterParams
from fiberphoton.errors import MalformedFile
from fiberphoton.sim import SimConfig, simulate_streams


def small_config(seed=1):
    return SimConfig(emitter=EmitterParams(w_p=0.01, gamma=0.02),
                     duration=1e5, seed=seed)


class TestStreamCsv:
    def test_round_trip_with_sidecar(self, tmp_path):
        cfg = small_config()
        streams = simulate_streams(cfg)
        path = tmp_path / "stream.csv"
        fio.write_stream_csv(path, streams)
        fio.write_sim_sidecar(fio.sidecar_path(path), cfg)
        back = fio.read_stream_csv(path)
        for orig, rt in zip(streams, back):
            assert rt.duration == cfg.duration
            assert np.allclose(rt.times, orig.times, atol=1e-6)

    def test_duration_fallback_without_sidecar(self, tmp_path):
        cfg = small_config()
        streams = simulate_streams(cfg)
        path = tmp_path / "stream.csv"
        fio.write_stream_csv(path, streams)
        back = fio.read_stream_csv(path)
        last = max(s.times[-1] for s in streams)
        assert back[0].duration == pytest.approx(last, abs=1e-5)

    def test_malformed_header_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("wrong,header\n1,2.0\n")
        with pytest.raises(MalformedFile) as err:
            fio.read_stream_csv(path)
        assert err.value.line == 1

    def test_malformed_row_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("channel,time_ns\n1,1.0\n1,not-a-number\n")
        with pytest.raises(MalformedFile) as err:
            fio.read_stream_csv(path)
        assert err.value.line == 3

    def test_bad_channel_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("channel,time_ns\n3,1.0\n")
        with pytest.raises(MalformedFile):
            fio.read_stream_csv(path)


class TestHistogramCsv:
    def test_round_trip(self, tmp_path):
        edges = make_edges(10.0, 1.0)
        counts = np.arange(20, dtype=np.int64)
        norm = counts / 10.0
        err = np.sqrt(np.maximum(counts, 1)) / 10.0
        h = CoincidenceHistogram(edges, counts, int(counts.sum()), 10.0, 1e6,
                                 norm=norm, norm_err=err)
        path = tmp_path / "hist.csv"
        fio.write_histogram_csv(path, h)
        back = fio.read_histogram_csv(path, duration=1e6)
        assert np.array_equal(back.counts, counts)
        assert np.allclose(back.bin_edges, edges, atol=1e-6)
        assert np.allclose(back.norm, norm, rtol=1e-8)

    def test_unnormalized_round_trip(self, tmp_path):
        edges = make_edges(5.0, 1.0)
        counts = np.ones(10, dtype=np.int64)
        h = CoincidenceHistogram(edges, counts, 10, 5.0, 1e3)
        path = tmp_path / "hist.csv"
        fio.write_histogram_csv(path, h)
        back = fio.read_histogram_csv(path)
        assert back.norm is None

    def test_malformed(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("nope\n")
        with pytest.raises(MalformedFile):
            fio.read_histogram_csv(path)


class TestSaturationCsv:
    def test_round_trip(self, tmp_path):
        data = [(0.1, 300.0), (0.5, 900.0), (1.0, 1200.0), (2.0, 1400.0)]
        path = tmp_path / "sat.csv"
        fio.write_saturation_csv(path, data)
        back = fio.read_saturation_csv(path)
        assert back == pytest.approx(data)

    def test_malformed_reports_line(self, tmp_path):
        path = tmp_path / "sat.csv"
        path.write_text("power_uW,intensity_cps\n0.1,300\nbad,row\n")
        with pytest.raises(MalformedFile) as err:
            fio.read_saturation_csv(path)
        assert err.value.line == 3


class TestCliSimulate:
    def test_deterministic_rerun(self, tmp_path):
        args = ["simulate", "--wp", "0.01", "--gamma", "0.02",
                "--duration", "1e5", "--seed", "7", "--out", str(tmp_path)]
        assert main(args) == 0
        first = (tmp_path / "stream.csv").read_bytes()
        assert main(args) == 0
        assert (tmp_path / "stream.csv").read_bytes() == first
        assert fio.sidecar_path(tmp_path / "stream.csv").exists()

    def test_missing_required_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["simulate", "--wp", "0.01"])
        assert err.value.code == 2
        assert "usage" in capsys.readouterr().err

    def test_invalid_config_exits_2(self, tmp_path):
        code = main(["simulate", "--wp", "-1", "--duration", "1e5",
                     "--seed", "1", "--out", str(tmp_path)])
        assert code == 2

    def test_pulsed_requires_pulse_flags(self, tmp_path):
        code = main(["simulate", "--wp", "0.5", "--pulsed",
                     "--duration", "1e5", "--seed", "1", "--out", str(tmp_path)])
        assert code == 2


class TestCliCorrelate:
    def _simulate(self, tmp_path, seed=3):
        assert main(["simulate", "--wp", "0.01", "--gamma", "0.02",
                     "--duration", "5e5", "--seed", str(seed),
                     "--out", str(tmp_path)]) == 0
        return tmp_path / "stream.csv"

    def test_correlate_writes_histogram(self, tmp_path):
        stream = self._simulate(tmp_path)
        code = main(["correlate", str(stream), "--window", "100",
                     "--bin", "1", "--out", str(tmp_path)])
        assert code == 0
        h = fio.read_histogram_csv(tmp_path / "histogram.csv")
        assert h.counts.sum() > 0
        assert h.norm is not None

    def test_malformed_input_exits_2(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("channel,time_ns\n1,zzz\n")
        assert main(["correlate", str(bad), "--out", str(tmp_path)]) == 2

    def test_missing_input_exits_3(self, tmp_path):
        assert main(["correlate", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path)]) == 3

    def test_empty_input_warns_exits_0(self, tmp_path, capsys):
        empty = tmp_path / "empty.csv"
        empty.write_text("channel,time_ns\n")
        code = main(["correlate", str(empty), "--normalize", "none",
                     "--out", str(tmp_path)])
        assert code == 0
        assert "no coincidences" in capsys.readouterr().err

    def test_mismatched_durations_exit_2(self, tmp_path):
        a = self._simulate(tmp_path / "a", seed=3)
        b_dir = tmp_path / "b"
        assert main(["simulate", "--wp", "0.01", "--gamma", "0.02",
                     "--duration", "7e5", "--seed", "4",
                     "--out", str(b_dir)]) == 0
        code = main(["correlate", str(a), str(b_dir / "stream.csv"),
                     "--out", str(tmp_path)])
        assert code == 2


class TestCliFit:
    def test_saturation_fit_and_unknown_model(self, tmp_path, capsys):
        from fiberphoton.fit import saturation_model
        powers = np.linspace(0.05, 3.0, 12)
        data = list(zip(powers, saturation_model(powers, 1500.0, 0.54, 100.0)))
        sat = tmp_path / "sat.csv"
        fio.write_saturation_csv(sat, data)
        code = main(["fit", str(sat), "--model", "saturation",
                     "--out", str(tmp_path)])
        assert code == 0
        report = json.loads((tmp_path / "fit.json").read_text())
        assert report["params"]["P_sat"] == pytest.approx(0.54, rel=1e-3)

        with pytest.raises(SystemExit) as err:
            main(["fit", str(sat), "--model", "bogus"])
        assert err.value.code == 2

    def test_pulsed_requires_tau_o(self, tmp_path):
        hist = tmp_path / "h.csv"
        edges = make_edges(10.0, 1.0)
        counts = np.ones(20, dtype=np.int64)
        h = CoincidenceHistogram(edges, counts, 20, 10.0, 1.0,
                                 norm=counts.astype(float),
                                 norm_err=np.ones(20))
        fio.write_histogram_csv(hist, h)
        assert main(["fit", str(hist), "--model", "pulsed",
                     "--out", str(tmp_path)]) == 2


class TestCliGeometry:
    def test_channeling_value(self, capsys):
        assert main(["geometry", "channeling", "--n", "1.45"]) == 0
        assert capsys.readouterr().out.strip() == "0.310345"

    def test_modes_summary(self, capsys):
        assert main(["geometry", "modes", "--a", "1.0", "--lambda", "1.0",
                     "--n", "1.45"]) == 0
        assert capsys.readouterr().out.strip() == "m=13..18 count=6"

    def test_confinement_below_critical_offset(self, capsys):
        assert main(["geometry", "confinement", "--n", "1.45",
                     "--r-over-a", "0.5"]) == 0
        assert float(capsys.readouterr().out) == 0.0

    def test_invalid_geometry_exits_2(self):
        assert main(["geometry", "channeling", "--n", "0.5"]) == 2

    def test_confinement_sweep_csv(self, tmp_path):
        assert main(["geometry", "confinement", "--n", "1.45", "--sweep",
                     "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "confinement_sweep.csv").read_text().splitlines()
        assert lines[0] == "x,value"
        assert len(lines) == 102


class TestCliPipeline:
    def test_bad_config_exits_2(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        assert main(["pipeline", "--config", str(cfg),
                     "--out", str(tmp_path)]) == 2

    def test_missing_config_exits_3(self, tmp_path):
        assert main(["pipeline", "--config", str(tmp_path / "none.json"),
                     "--out", str(tmp_path)]) == 3

    def test_outdir_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("FIBERPHOTON_OUTDIR", str(tmp_path / "envout"))
        assert main(["simulate", "--wp", "0.01", "--gamma", "0.02",
                     "--duration", "1e5", "--seed", "1"]) == 0
        assert (tmp_path / "envout" / "stream.csv").exists()

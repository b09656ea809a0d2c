import numpy as np
import pytest

from rrff import io
from rrff.cli import main
from rrff.config import (
    ConfigError,
    ExperimentConfig,
    config_hash,
    parse_config,
)
from rrff.features import predict
from rrff.fem import build_mesh_1d, triangulate_2d
from rrff.pde_data import gen_advection_I, uniform_grid
from rrff.pipeline import split_grid, train
from rrff.sampling import INF, RngState, StudentTParams
from rrff.solver import RegularizationSpec

CONFIG_TEXT = """\
problem = advection1
grid_size = 25
n_train = 30
n_test = 10
n_validation = 5
n_features = 200
alpha = 0.01
noise_train_input = 0.05
noise_train_output = 0.05
noise_test_input = 0.05
seed = 3
"""


@pytest.fixture()
def config_file(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(CONFIG_TEXT)
    return path


class TestConfig:
    def test_parse_round_trip_values(self):
        cfg = parse_config(CONFIG_TEXT)
        assert cfg.problem == "advection1"
        assert cfg.grid_size == 25
        assert cfg.alpha == 0.01
        assert cfg.noise_test_input == 0.05

    def test_comments_and_blank_lines(self):
        cfg = parse_config("# heading\nproblem = burgers\n\nnu = inf # tail\n")
        assert cfg.problem == "burgers"
        assert cfg.nu == INF

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            parse_config("problem = darcy\nbogus = 1\n")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError):
            parse_config("problem = darcy\nseed = 1\nseed = 2\n")

    def test_missing_problem(self):
        with pytest.raises(ConfigError):
            parse_config("seed = 1\n")

    def test_bad_int(self):
        with pytest.raises(ConfigError):
            parse_config("problem = darcy\nn_train = many\n")

    def test_noise_range(self):
        with pytest.raises(ConfigError):
            parse_config("problem = darcy\nnoise_test_input = 1.5\n")

    def test_hash_stable_and_sensitive(self):
        a = parse_config(CONFIG_TEXT)
        b = parse_config(CONFIG_TEXT)
        c = parse_config(CONFIG_TEXT.replace("seed = 3", "seed = 4"))
        assert config_hash(a) == config_hash(b)
        assert config_hash(a) != config_hash(c)
        assert len(config_hash(a)) == 16

    def test_hash_independent_of_key_order(self):
        a = parse_config("problem = darcy\nseed = 5\n")
        b = parse_config("seed = 5\nproblem = darcy\n")
        assert config_hash(a) == config_hash(b)


class TestArrayContainer:
    def test_round_trip_bit_exact(self, tmp_path):
        g = RngState(0).generator()
        arrays = {
            "a": g.standard_normal((3, 4)),
            "b": g.standard_normal(7),
            "c": np.array(2.5),
        }
        meta = {"kind": "test", "count": 3, "label": "x y"}
        io.write_arrays(tmp_path / "box", arrays, meta)
        back, meta_back = io.read_arrays(tmp_path / "box")
        for name, arr in arrays.items():
            assert back[name].shape == np.asarray(arr).shape
            np.testing.assert_array_equal(back[name], arr)
        assert meta_back["count"] == 3
        assert meta_back["label"] == "x y"

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(io.FormatError):
            io.read_arrays(tmp_path)

    def test_missing_payload(self, tmp_path):
        io.write_arrays(tmp_path / "box", {"a": np.ones(3)})
        (tmp_path / "box" / "a.bin").unlink()
        with pytest.raises(io.FormatError):
            io.read_arrays(tmp_path / "box")

    def test_truncated_payload(self, tmp_path):
        io.write_arrays(tmp_path / "box", {"a": np.ones(5)})
        payload = tmp_path / "box" / "a.bin"
        payload.write_bytes(payload.read_bytes()[:-8])
        with pytest.raises(io.FormatError):
            io.read_arrays(tmp_path / "box")

    def test_newline_in_metadata_rejected(self, tmp_path):
        with pytest.raises(io.FormatError):
            io.write_arrays(tmp_path / "box", {}, {"key": "line1\nline2"})


class TestDatasetIo:
    def test_round_trip(self, tmp_path):
        ds = gen_advection_I(6, uniform_grid(12), RngState(1))
        io.write_dataset(tmp_path / "ds", ds)
        back = io.read_dataset(tmp_path / "ds")
        np.testing.assert_array_equal(back.inputs, ds.inputs)
        np.testing.assert_array_equal(back.outputs, ds.outputs)
        np.testing.assert_array_equal(back.input_grid, ds.input_grid)
        assert back.metadata["seed"] == ds.metadata["seed"]

    def test_regeneration_byte_identical(self, tmp_path):
        """The on-disk bytes are a pure function of the dataset content."""
        ds = gen_advection_I(4, uniform_grid(10), RngState(2))
        io.write_dataset(tmp_path / "a", ds)
        io.write_dataset(tmp_path / "b", ds)
        for name in ("manifest.txt", "inputs.bin", "outputs.bin",
                     "input_grid.bin", "output_grid.bin"):
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes()

    def test_wrong_kind_rejected(self, tmp_path):
        io.write_arrays(tmp_path / "box", {"inputs": np.ones((1, 2))},
                        {"kind": "other"})
        with pytest.raises(io.FormatError):
            io.read_dataset(tmp_path / "box")


class TestOperatorIo:
    def test_round_trip_predictions_identical(self, tmp_path):
        grid = uniform_grid(15)
        ds = gen_advection_I(20, grid, RngState(3))
        split = split_grid(grid, 4)
        op = train(ds, split, StudentTParams(INF, 0.5), 60,
                   RegularizationSpec(0.01, 2.0), RngState(5))
        op.config["config_hash"] = "deadbeef"
        io.write_operator(tmp_path / "model", op)
        back = io.read_operator(tmp_path / "model")
        np.testing.assert_array_equal(back.model.weights.omega,
                                      op.model.weights.omega)
        np.testing.assert_array_equal(predict(back.model, ds.inputs),
                                      predict(op.model, ds.inputs))
        np.testing.assert_array_equal(back.split.train_idx, op.split.train_idx)
        np.testing.assert_array_equal(back.mesh.nodes, op.mesh.nodes)
        np.testing.assert_array_equal(back.mesh.order, op.mesh.order)
        assert back.model.weights.params.nu == INF
        assert back.model.weights.params.sigma == 0.5
        assert back.model.reg.alpha == 0.01

    def test_complex_coefficients_round_trip(self, tmp_path):
        grid = uniform_grid(15)
        ds = gen_advection_I(20, grid, RngState(7))
        split = split_grid(grid, 8)
        op = train(ds, split, StudentTParams(INF, 0.5), 60,
                   RegularizationSpec(0.01, 2.0), RngState(9),
                   coefficient_field="complex")
        assert np.iscomplexobj(op.model.coefficients)
        io.write_operator(tmp_path / "model", op)
        back = io.read_operator(tmp_path / "model")
        np.testing.assert_array_equal(back.model.coefficients,
                                      op.model.coefficients)
        np.testing.assert_array_equal(predict(back.model, ds.inputs),
                                      predict(op.model, ds.inputs))
        assert back.config["coefficient_field"] == "complex"


class TestMeshIo:
    def test_round_trip_1d(self, tmp_path):
        mesh = build_mesh_1d([0.7, 0.1, 0.4])
        io.write_mesh(tmp_path / "mesh.txt", mesh)
        back = io.read_mesh(tmp_path / "mesh.txt")
        np.testing.assert_array_equal(back.nodes, mesh.nodes)

    def test_round_trip_2d(self, tmp_path):
        mesh = triangulate_2d(RngState(6).generator().uniform(size=(12, 2)))
        io.write_mesh(tmp_path / "mesh.txt", mesh)
        back = io.read_mesh(tmp_path / "mesh.txt")
        np.testing.assert_array_equal(back.nodes, mesh.nodes)
        assert back.triangles.shape == mesh.triangles.shape

    def test_bad_header(self, tmp_path):
        (tmp_path / "mesh.txt").write_text("vertices 3 1\n")
        with pytest.raises(io.FormatError):
            io.read_mesh(tmp_path / "mesh.txt")


class TestReportIo:
    def test_round_trip(self, tmp_path):
        header = ["trial", "error"]
        rows = [[0, "1.5e-2"], [1, "2.5e-2"]]
        io.write_report(tmp_path / "r.csv", header, rows)
        h, r = io.read_report(tmp_path / "r.csv")
        assert h == header
        assert r == [["0", "1.5e-2"], ["1", "2.5e-2"]]

    def test_empty_rejected(self, tmp_path):
        (tmp_path / "r.csv").write_text("")
        with pytest.raises(io.FormatError):
            io.read_report(tmp_path / "r.csv")


class TestCliEndToEnd:
    def test_gen_train_eval(self, tmp_path, config_file, capsys):
        data = tmp_path / "data"
        assert main(["gen-data", "--config", str(config_file),
                     "--out", str(data)]) == 0
        for role, count in (("train", 30), ("test", 10), ("validation", 5)):
            ds = io.read_dataset(data / role)
            assert ds.n_samples == count
            assert ds.metadata["role"] == role

        out = tmp_path / "run"
        assert main(["train", "--config", str(config_file),
                     "--data", str(data), "--out", str(out)]) == 0
        op = io.read_operator(out / "model")
        assert op.model.coefficients.shape[0] == 200

        assert main(["eval", "--config", str(config_file), "--data", str(data),
                     "--out", str(out), "--trials", "2"]) == 0
        header, rows = io.read_report(out / "eval.csv")
        assert header[0] == "trial"
        assert len(rows) == 3  # two trials plus the mean row
        assert rows[-1][0] == "mean"
        errors = [float(r[2]) for r in rows[:-1]]
        assert all(0.0 <= e < 1.5 for e in errors)
        capsys.readouterr()

    def test_gen_data_deterministic(self, tmp_path, config_file, capsys):
        for name in ("a", "b"):
            assert main(["gen-data", "--config", str(config_file),
                         "--out", str(tmp_path / name)]) == 0
        for role in ("train", "test", "validation"):
            for fname in ("manifest.txt", "inputs.bin", "outputs.bin"):
                assert (tmp_path / "a" / role / fname).read_bytes() == \
                    (tmp_path / "b" / role / fname).read_bytes()
        capsys.readouterr()

    def test_alpha_sweep_single_point(self, tmp_path, config_file, capsys):
        data = tmp_path / "data"
        main(["gen-data", "--config", str(config_file), "--out", str(data)])
        out = tmp_path / "sweep"
        assert main(["alpha-sweep", "--config", str(config_file),
                     "--data", str(data), "--out", str(out),
                     "--alphas", "0.01"]) == 0
        header, rows = io.read_report(out / "alpha_sweep.csv")
        assert header[0] == "alpha"
        assert len(rows) == 1
        capsys.readouterr()

    def test_theory_check(self, tmp_path, capsys):
        out = tmp_path / "theory"
        assert main(["theory-check", "--m", "4", "--kappa", "6.0",
                     "--sigma", "1.0", "--n", "256", "--trials", "5",
                     "--out", str(out)]) == 0
        _, rows = io.read_report(out / "concentration.csv")
        assert len(rows) == 5
        _, summary = io.read_report(out / "concentration_summary.csv")
        keys = {r[0] for r in summary}
        assert {"m", "N", "eta", "failure_fraction"} <= keys
        capsys.readouterr()

    def test_missing_config_is_error_exit(self, tmp_path, capsys):
        assert main(["gen-data", "--config", str(tmp_path / "nope.cfg"),
                     "--out", str(tmp_path / "d")]) == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_config_key_is_error_exit(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("problem = advection1\nwhat = 3\n")
        assert main(["gen-data", "--config", str(bad),
                     "--out", str(tmp_path / "d")]) == 1
        assert "unknown key" in capsys.readouterr().err

    def test_seed_override_changes_data(self, tmp_path, config_file, capsys):
        main(["gen-data", "--config", str(config_file),
              "--out", str(tmp_path / "a")])
        main(["gen-data", "--config", str(config_file), "--seed", "99",
              "--out", str(tmp_path / "b")])
        a = io.read_dataset(tmp_path / "a" / "train")
        b = io.read_dataset(tmp_path / "b" / "train")
        assert not np.array_equal(a.inputs, b.inputs)
        capsys.readouterr()

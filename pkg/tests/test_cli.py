import io
import json

import pytest

from cli.experiment_config import ExperimentConfig
from cli.main import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, run
from utilities.errors import ModelError
from utilities.files.data_loader_client import UniversalDataLoader

EXP_EXP_INVERSE = {
    "rate": {"kind": "critical_inverse", "v_c": 1, "theta": 3},
    "claims": {
        "xi": {"family": "exponential", "rate": 1},
        "tau": {"family": "exponential", "rate": 1},
    },
}


@pytest.fixture
def write_config(tmp_path):
    def write(data, name="config.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data) if not isinstance(data, str) else data, encoding="utf-8")
        return str(path)

    return write


def _run(*argv):
    out = io.StringIO()
    code = run(list(argv), out=out)
    return code, out.getvalue()


def test_classify_prints_verdict(write_config):
    code, text = _run("classify", "--config", write_config({"model": EXP_EXP_INVERSE}))
    assert code == EXIT_OK
    assert text == "Transient (theta=3 > threshold=1, rho=2)\n"


def test_empty_config_is_a_config_error(write_config):
    assert _run("classify", "--config", write_config(""))[0] == EXIT_CONFIG
    assert _run("classify", "--config", write_config({}))[0] == EXIT_CONFIG


def test_missing_file_and_bad_flags(tmp_path):
    assert _run("classify", "--config", str(tmp_path / "absent.json"))[0] == EXIT_CONFIG
    assert _run("classify", "--config", "x.json", "--frobnicate")[0] == EXIT_CONFIG
    assert _run("teleport", "--config", "x.json")[0] == EXIT_CONFIG
    assert _run("--help")[0] == EXIT_OK


def test_unknown_experiment_field(write_config):
    path = write_config({"model": EXP_EXP_INVERSE, "experiment": {"n_path": 10}})
    assert _run("simulate", "--config", path)[0] == EXIT_CONFIG


def test_profile_export_header(write_config):
    path = write_config({"model": EXP_EXP_INVERSE, "experiment": {"grid": [1, 2, 4]}})
    code, text = _run("profile-export", "--config", path, "--seed", "7")
    assert code == EXIT_OK
    lines = text.splitlines()
    assert lines[0] == "# command=profile-export"
    assert lines[1].startswith("# config={")
    assert lines[2] == "# seed=7"
    assert lines[3].startswith("# version=")
    assert lines[4] == "x,q,Q,U,U_plus,U_minus"
    assert len(lines) == 8


def test_output_file_round_trips(write_config, tmp_path):
    path = write_config({"model": EXP_EXP_INVERSE, "experiment": {"grid": [1, 2, 4]}})
    target = tmp_path / "profile.csv"
    code, text = _run("profile-export", "--config", path, "--out", str(target))
    assert code == EXIT_OK
    assert text == ""
    table = UniversalDataLoader().load_data(str(target))
    assert table["x"].tolist() == [1.0, 2.0, 4.0]
    assert table["q"].tolist() == pytest.approx([3.0, 1.5, 0.75])


CURVE_EXPERIMENT = {
    "grid": [2, 5, 10],
    "n_paths": 1500,
    "caps": {"max_steps": 10_000, "level_cap": 100},
}


def test_curve_output_is_independent_of_threads(write_config):
    path = write_config({"model": EXP_EXP_INVERSE, "experiment": CURVE_EXPERIMENT})
    code_one, one = _run("curve", "--config", path, "--seed", "3", "--threads", "1")
    code_two, two = _run("curve", "--config", path, "--seed", "3", "--threads", "2")
    assert code_one == code_two == EXIT_OK
    assert one == two
    assert "x,p_hat,half_width,n_paths,censored_cap,censored_horizon,p_hat_pessimistic" in one


def test_seed_changes_output(write_config):
    path = write_config({"model": EXP_EXP_INVERSE, "experiment": CURVE_EXPERIMENT})
    assert _run("curve", "--config", path, "--seed", "1", "--threads", "1")[1] != _run(
        "curve", "--config", path, "--seed", "2", "--threads", "1"
    )[1]


def test_numerical_failure_exit_code(write_config):
    model = dict(EXP_EXP_INVERSE, rate={"kind": "constant", "v": 2})
    experiment = {"grid": [200, 300, 400, 500], "n_paths": 50, "caps": {"max_steps": 2_000, "level_cap": 600}}
    path = write_config({"model": model, "experiment": experiment})
    # no path is ruined from these levels, so the decay fit has nothing to fit
    assert _run("fit", "--config", path, "--threads", "1")[0] == EXIT_NUMERICAL


def test_validate_expexp_header(write_config):
    experiment = {"grid": [2, 4], "n_paths": 500, "caps": {"max_steps": 10_000, "level_cap": 100}}
    path = write_config({"model": EXP_EXP_INVERSE, "experiment": experiment})
    code, text = _run("validate-expexp", "--config", path, "--threads", "1")
    assert code == EXIT_OK
    assert "# asymptotic_shape=power" in text.splitlines()


def test_experiment_config_parsing():
    cfg = ExperimentConfig.from_dict(
        {
            "model": EXP_EXP_INVERSE,
            "experiment": {"x": 5, "grid": [1, 2], "caps": {"max_steps": 100, "level_cap": 50}},
        }
    )
    assert cfg.params.x == 5.0
    assert cfg.params.grid == (1.0, 2.0)
    assert cfg.params.caps(5.0).level_cap == 50.0
    assert cfg.params.grid_caps().max_steps == 100
    echo = json.loads(cfg.echo())
    assert echo["experiment"]["n_paths"] == 10_000
    assert echo["model"]["rate"] == {"kind": "critical_inverse", "v_c": 1.0, "theta": 3.0, "z_min": 1.0}
    assert echo["model"]["claims"] == EXP_EXP_INVERSE["claims"]
    assert echo["experiment"]["escape_level"] is None


def test_experiment_defaults_use_level_caps():
    cfg = ExperimentConfig.from_dict({"model": EXP_EXP_INVERSE})
    assert cfg.params.grid_caps() is None
    assert cfg.params.caps(500.0).level_cap == 50_000.0


@pytest.mark.parametrize(
    "data, message",
    [
        ({"experiment": {}}, "model"),
        ({"model": EXP_EXP_INVERSE, "extra": {}}, "unknown config sections"),
        ({"model": EXP_EXP_INVERSE, "experiment": {"caps": {"steps": 1}}}, "unknown caps"),
        ({"model": EXP_EXP_INVERSE, "experiment": {"grid": []}}, "non-empty grid"),
        ({"model": EXP_EXP_INVERSE, "experiment": {"n_paths": "many"}}, "invalid experiment value"),
    ],
)
def test_experiment_config_errors(data, message):
    with pytest.raises(ModelError, match=message):
        ExperimentConfig.from_dict(data)


def test_echo_fills_model_defaults():
    model = {
        "rate": {
            "kind": "critical_power",
            "v_c": 1,
            "theta": 2,
            "alpha": 0.5,
            "envelope": {"coefficient": 0.5, "exponent": 2},
        },
        "claims": {
            "xi": {"family": "pareto", "beta": 1},
            "tau": {"family": "exponential", "rate": 2},
        },
    }
    cfg = ExperimentConfig.from_dict(
        {"model": model, "experiment": {"caps": {"level_cap": 100, "escape_level": 60}}}
    )
    echo = json.loads(cfg.echo())
    assert echo["model"]["rate"]["z_min"] == 1.0
    assert echo["model"]["rate"]["envelope"] == {"coefficient": 0.5, "exponent": 2.0}
    assert echo["model"]["claims"]["xi"] == {"family": "pareto", "beta": 1.0, "scale": 1.0}
    assert echo["experiment"]["escape_level"] == 60.0
    assert cfg.params.caps(5.0).escape_level == 60.0
    # the echo is itself a valid model section
    assert ExperimentConfig.from_dict({"model": echo["model"]}).model == cfg.model


def test_echo_of_tabulated_rate_reads_back():
    model = {"rate": {"kind": "tabulated", "breakpoints": [[0, 3], [5, 2]]}, "claims": EXP_EXP_INVERSE["claims"]}
    cfg = ExperimentConfig.from_dict({"model": model})
    echo = json.loads(cfg.echo())
    assert echo["model"]["rate"]["breakpoints"] == [[0.0, 3.0], [5.0, 2.0]]
    assert ExperimentConfig.from_dict({"model": echo["model"]}).model == cfg.model

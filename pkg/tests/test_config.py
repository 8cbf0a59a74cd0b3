import pytest
from hypothesis import given
from hypothesis import strategies as st

from arena_rigging.config import (
    FIELD_NAMES,
    ConfigError,
    SimulationConfig,
    coerce_value,
    dump_config,
    load_config,
    parse_config,
)


def test_parse_basic():
    cfg = parse_config("""
        # comment
        target = m03
        strategy = omni_bt   # trailing comment
        n_votes = 5_000
        filter_tau = 0.7
        duplicate_eta = none
        update_local = yes
    """)
    assert cfg.target == "m03" and cfg.strategy == "omni_bt"
    assert cfg.n_votes == 5000 and cfg.filter_tau == 0.7
    assert cfg.duplicate_eta is None and cfg.update_local is True


def test_disabled_spellings():
    for word in ("inf", "disabled", "none"):
        assert parse_config(f"duplicate_eta = {word}").duplicate_eta is None


@pytest.mark.parametrize("text", [
    "unknown_key = 1",
    "n_votes = lots",
    "n_votes",
    "seed = 1\nseed = 2",
    "update_local = maybe",
    "n_votes = none",
])
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_dump_roundtrip_defaults():
    cfg = SimulationConfig()
    assert parse_config(dump_config(cfg)) == cfg


@given(st.integers(0, 2**31), st.sampled_from(["t_tie", "omni_on", "none"]),
       st.one_of(st.none(), st.floats(0.51, 0.99)), st.booleans())
def test_dump_roundtrip(seed, strategy, tau, flag):
    cfg = SimulationConfig(seed=seed, strategy=strategy, filter_tau=tau, update_local=flag,
                           target="m01")
    assert parse_config(dump_config(cfg)) == cfg


def test_dump_covers_every_field():
    keys = {line.split(" = ")[0] for line in dump_config(SimulationConfig()).splitlines()}
    assert keys == FIELD_NAMES


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_replace_rejects_unknown():
    with pytest.raises(ConfigError):
        SimulationConfig().replace(bogus=1)


def test_coerce():
    assert coerce_value("sampling_beta", "0.3") == 0.3
    assert coerce_value("accounts", "4") == 4
    with pytest.raises(ConfigError):
        coerce_value("colour", "red")


def test_views():
    cfg = SimulationConfig(hist_access="scores_only", duplicate_eta=100, concurrent_votes=7)
    assert cfg.threat_model.hist_access == "scores_only"
    assert cfg.threat_model.concurrent_votes == 7
    assert cfg.defense.duplicate_eta == 100 and cfg.defense.suspension_length == 200


def test_validate_defense_ranges():
    with pytest.raises(ConfigError):
        SimulationConfig(filter_tau=0.4).validate()
    with pytest.raises(ConfigError):
        SimulationConfig(strategy="wizard", target="m00").validate()

import dataclasses
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcfmodel.config import (ChannelParams, ConfigError, MacParams, Scenario, SolverConfig,
                             TrafficParams, dump_scenario, load_scenario, parse_scenario,
                             save_scenario)

TABLE_I = dict(w_min=32, m=5, slot_time_us=20, sifs_us=10, difs_us=50, eifs_us=300,
               prop_delay_us=1, mac_header_bytes=24, phy_header_bytes=16, ack_bytes=14,
               rts_bytes=20, cts_bytes=14, ack_timeout_us=300, payload_bytes=1024)


def test_defaults_are_table_one():
    mac = MacParams()
    for key, value in TABLE_I.items():
        assert getattr(mac, key) == value, key
    assert mac.data_rate_bps == mac.ctrl_rate_bps == 1_000_000


def test_empty_file_gives_defaults():
    assert parse_scenario("") == Scenario()
    assert parse_scenario("# nothing here\n\n") == Scenario()


def test_full_table_file(tmp_path):
    path = tmp_path / "table1.cfg"
    path.write_text("".join(f"{k} = {v}\n" for k, v in TABLE_I.items()))
    mac, ch, tr, cfg = load_scenario(path)
    assert mac == MacParams()
    assert (ch, tr, cfg) == (ChannelParams(), TrafficParams(), SolverConfig())


def test_w_min_one_names_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("w_min = 1\n")
    with pytest.raises(ConfigError, match="w_min"):
        load_scenario(path)


@pytest.mark.parametrize("text, needle", [
    ("w_min 32\n", ":1:"),
    ("m = 5\nbogus = 3\n", ":2: unknown key"),
    ("payload_bytes = 10.5\n", "payload_bytes"),
    ("saturated = maybe\n", "saturated"),
    ("modulation = QAM64\n", "modulation"),
    ("fer_override = 1.5\n", "fer_override"),
])
def test_parse_errors(text, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_scenario(text, source="x.cfg")


def test_inline_comments_and_types():
    sc = parse_scenario("n_stations = 20  # more\nsaturated = yes\nz0_db = inf\n"
                        "fer_override = 0.1\nmodulation = dqpsk\n")
    assert sc.traffic.n_stations == 20 and sc.traffic.saturated
    assert math.isinf(sc.channel.z0_db) and sc.channel.z0_linear == math.inf
    assert sc.channel.fer_override == 0.1 and sc.channel.modulation == "DQPSK"


def test_replace_and_unknown_key():
    sc = Scenario().replace(n_stations="5", lambda_pkt_s=2.5)
    assert sc.traffic.n_stations == 5 and sc.traffic.lambda_pkt_s == 2.5
    assert sc.mac is Scenario().mac
    with pytest.raises(ConfigError, match="nope"):
        Scenario().replace(nope=1)


def test_unpacks_in_order():
    mac, ch, tr, cfg = Scenario()
    assert isinstance(mac, MacParams) and isinstance(cfg, SolverConfig)


scenarios = st.builds(
    Scenario,
    mac=st.builds(MacParams, w_min=st.integers(2, 1024), m=st.integers(0, 8),
                  payload_bytes=st.integers(1, 4000),
                  data_rate_bps=st.floats(1e5, 1e8)),
    channel=st.builds(ChannelParams,
                      snr_db=st.one_of(st.just(math.inf), st.floats(-20, 80)),
                      z0_db=st.one_of(st.just(math.inf), st.floats(-10, 300)),
                      fer_override=st.one_of(st.none(), st.floats(0, 1))),
    traffic=st.builds(TrafficParams, n_stations=st.integers(1, 200),
                      lambda_pkt_s=st.floats(0, 1e4), saturated=st.booleans()),
    solver=st.builds(SolverConfig, tol=st.floats(1e-15, 1e-3),
                     damping=st.floats(0.01, 1.0)),
)


@settings(max_examples=60, deadline=None)
@given(scenarios)
def test_round_trip(sc):
    assert parse_scenario(dump_scenario(sc)) == sc


def test_save_load(tmp_path):
    sc = Scenario().replace(n_stations=7, snr_db=12.5)
    save_scenario(sc, tmp_path / "s.cfg")
    assert load_scenario(tmp_path / "s.cfg") == sc


def test_window_capped():
    mac = MacParams(w_min=16, m=3)
    assert [mac.window(i) for i in range(6)] == [16, 32, 64, 128, 128, 128]


def test_frozen():
    with pytest.raises(dataclasses.FrozenInstanceError):
        MacParams().w_min = 8

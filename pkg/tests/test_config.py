import pytest

from ghzclock.config import ConfigError, load_rates, parse_config, rates_digest
from ghzclock.params import LowerLevelRates


def test_parse_comments_and_blanks():
    text = "# header\n\nlink_length_L = 2000  # shorter link\ngamma_dark=5\n"
    assert parse_config(text) == {"link_length_L": 2000.0, "gamma_dark": 5.0}


@pytest.mark.parametrize(
    "text, match",
    [("bogus = 1", "unknown key"), ("gamma_dark 5", "key = value"), ("gamma_dark = x", "not a number")],
)
def test_parse_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_digest_tracks_resolved_values(tmp_path):
    rates, digest = load_rates(None)
    assert rates == LowerLevelRates()
    same = tmp_path / "same.cfg"
    same.write_text("gamma_dark = 10\n")
    assert load_rates(same)[1] == digest
    other = tmp_path / "other.cfg"
    other.write_text("gamma_dark = 11\n")
    r2, d2 = load_rates(other)
    assert r2.gamma_dark == 11.0 and d2 != digest
    assert rates_digest(r2) == d2


def test_invalid_value_rejected(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("finesse_f = -3\n")
    with pytest.raises(ValueError):
        load_rates(p)

import pytest

from ldsitrack import config as cfg


def test_nested_keys():
    tree = cfg.loads("scene.trajectory.kind = circle\nldsi.TCE = 8\n")
    assert tree == {"scene": {"trajectory": {"kind": "circle"}}, "ldsi": {"TCE": 8}}


def test_scalar_types():
    tree = cfg.loads("a = 3\nb = 2.5\nc = true\nd = off\ne = hello\n")
    assert tree == {"a": 3, "b": 2.5, "c": True, "d": False, "e": "hello"}


def test_lists_from_commas():
    assert cfg.loads("p = 1,2.5,x\n")["p"] == [1, 2.5, "x"]


def test_comments_and_blanks():
    tree = cfg.loads("# header\n\na = 1  # trailing\n")
    assert tree == {"a": 1}


def test_round_trip():
    tree = {"scene": {"seed": 7, "trajectory": {"kind": "circle"}}, "x": [1, 2]}
    assert cfg.loads(cfg.dumps(tree)) == tree


def test_bad_line_reports_number():
    with pytest.raises(cfg.ConfigError, match="line 2"):
        cfg.loads("a = 1\nnot a pair\n")


def test_apply_override():
    tree = {"ldsi": {"TCE": 8}}
    cfg.apply_override(tree, "ldsi.TCE=10")
    cfg.apply_override(tree, "tracker.window=20")
    assert tree == {"ldsi": {"TCE": 10}, "tracker": {"window": 20}}


def test_override_requires_equals():
    with pytest.raises(cfg.ConfigError):
        cfg.apply_override({}, "nonsense")

import json

import pytest

from exchmine.datasets import toy_clustering, toy_dataset
from exchmine.errors import MigrationError, SessionComplete, SessionFormatError
from exchmine.patterns import Itemset, ItemsetFamily, mine_frequent
from exchmine.session import (SessionConfig, SessionState, add_constraints, iterate_manual,
                              iterate_smallest_p, load_session, read_session, remove_constraints,
                              replay_iteration, save_session, select_by_p_delta, select_top_significant,
                              write_session)


@pytest.fixture
def state():
    D = toy_dataset()
    return SessionState(D, mine_frequent(D, 3, 4), config=SessionConfig(samples=199, swap_attempts=264,
                                                                         seed=2, adjust=False))


def test_first_round_uses_margins_then_soft(state):
    s1 = iterate_smallest_p(state)
    rec = s1.history[0]
    assert rec.model == {"kind": "margins"}
    assert rec.chosen_constraint is not None
    assert len(s1.constraints) == 1
    X = Itemset(rec.chosen_constraint)
    # the chosen itemset has the smallest raw p among candidates, ties to smaller itemsets
    best = min(p.raw_p for p in rec.report.patterns)
    assert rec.report.by_name()[X.label(state.dataset.col_labels)].raw_p == best
    s2 = iterate_smallest_p(s1)
    assert s2.history[1].model["kind"] == "itemset-soft"
    assert s2.history[1].model["targets"] == [s1.mined.target(X)]
    assert len(s2.constraints) == 2


def test_manual_iteration_keeps_constraints(state):
    s = add_constraints(state, [(0, 1), (1, 7)])
    assert s.constraints.target_freqs == (3, 3)
    s = iterate_manual(s)
    assert s.history[-1].chosen_constraint is None
    assert len(s.constraints) == 2
    s = remove_constraints(s, [(0, 1)])
    assert [X.items for X in s.constraints] == [(1, 7)]
    with pytest.raises(KeyError):
        remove_constraints(s, [(0, 1)])


def test_exhausting_candidates(state):
    D = state.dataset
    small = SessionState(D, ItemsetFamily([(0, 1)]).with_targets(D), config=state.config)
    small = iterate_smallest_p(small)
    with pytest.raises(SessionComplete):
        iterate_smallest_p(small)


def test_round_trip_and_replay(state, tmp_path):
    s = iterate_smallest_p(iterate_smallest_p(state))
    s.clustering = toy_clustering()
    path = tmp_path / "session.json"
    write_session(s, path)
    back = read_session(path)
    assert save_session(back) == save_session(s)
    assert back.dataset == s.dataset
    assert back.constraints == s.constraints
    assert back.clustering == s.clustering
    for i, rec in enumerate(back.history):
        assert replay_iteration(back, i).to_dict() == rec.to_dict()
    assert list(tmp_path.iterdir()) == [path]


def test_corrupt_and_mismatched_files(state):
    text = save_session(iterate_smallest_p(state))
    with pytest.raises(SessionFormatError):
        load_session(text[: len(text) // 2])
    with pytest.raises(SessionFormatError):
        load_session(json.dumps({"schema": "something-else"}))
    d = json.loads(text)
    d["version"] = 99
    with pytest.raises(MigrationError) as info:
        load_session(json.dumps(d))
    assert info.value.found == 99
    d = json.loads(text)
    d["dataset"]["rows"][0] = "0" * 8
    with pytest.raises(SessionFormatError, match="hash"):
        load_session(json.dumps(d))
    d = json.loads(text)
    del d["history"]
    with pytest.raises(SessionFormatError):
        load_session(json.dumps(d).encode())


def test_selection_helpers(state):
    from exchmine.nullmodels import NullModel
    from exchmine.session import run_report
    A = run_report(state, NullModel.margins(), 1)
    top = select_top_significant(A, 3)
    assert len(top) == 3
    ps = sorted(p.raw_p for p in A.patterns)
    assert max(A.by_name()[X.label(state.dataset.col_labels)].raw_p for X in top) == ps[2]
    B = run_report(state, NullModel.itemset_soft(top), 1)
    delta = select_by_p_delta(A, B, 2)
    gains = sorted((B.by_name()[p.name].raw_p - p.raw_p for p in A.patterns), reverse=True)
    got = [B.by_name()[X.label("ABCDEFGH")].raw_p - A.by_name()[X.label("ABCDEFGH")].raw_p for X in delta]
    assert got == gains[:2]

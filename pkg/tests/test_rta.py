import pytest
from hypothesis import assume, given, settings, strategies as st

from mcsched import rta
from mcsched.core import ModeSpec, TaskSpec, TransitionClass as TC
from oracles import unit_step_schedule

PERIODS = [20, 25, 40, 50, 100, 200]


def test_table1_steady_state(table1):
    m1, m2 = table1.modes
    assert [rta.steady_state_wcrt(m1, t).R for t in m1.ids] == [10, 40, 80, 140, 200]
    assert [rta.steady_state_wcrt(m2, t).R for t in m2.ids] == [10, 30, 60, 100, 180]


def test_iterates_are_monotone(table1):
    res = rta.steady_state_wcrt(table1.modes[0], 6)
    assert res.converged and res.feasible
    assert res.iterates == sorted(res.iterates)
    assert res.iterates[-1] == res.R == 200


def test_overloaded_task_does_not_converge():
    mode = ModeSpec("X", (TaskSpec(1, 10, 10, 6, 1), TaskSpec(2, 20, 20, 9, 2)))
    res = rta.steady_state_wcrt(mode, 2)
    assert not res.converged and not res.feasible
    assert res.R > 20


def test_blocking_adds_to_response(table1):
    m1 = table1.modes[0]
    assert rta.steady_state_wcrt(m1, 1, blocking=5).R == 15


def _mode(spec):
    # deadline-monotonic priorities, ties by id
    order = sorted(range(len(spec)), key=lambda i: (spec[i][2], i))
    prio = {i: k + 1 for k, i in enumerate(order)}
    return ModeSpec("R", tuple(TaskSpec(i + 1, T, D, C, prio[i])
                               for i, (C, T, D) in enumerate(spec)))


task_sets = st.lists(
    st.sampled_from(PERIODS).flatmap(
        lambda T: st.tuples(st.integers(1, max(1, T // 3)), st.just(T),
                            st.integers(T // 2, T))),
    min_size=1, max_size=5)


@settings(max_examples=60, deadline=None)
@given(task_sets)
def test_matches_unit_step_schedule(spec):
    spec = [(min(C, D), T, D) for C, T, D in spec]
    mode = _mode(spec)
    tasks = [dict(id=t.id, C=t.C, T=t.T, D=t.D, P=t.P) for t in mode.resolved()]
    hyper = 200
    worst, misses = unit_step_schedule(tasks, 4 * hyper)
    for t in mode.resolved():
        res = rta.steady_state_wcrt(mode, t.id)
        if res.converged:
            assert res.R == worst[t.id]
        else:
            assert misses[t.id] > 0


@given(st.integers(-50, 50), st.integers(1, 30))
def test_ceil_helpers(num, den):
    assert rta.ceil_div(num, den) * den >= num > (rta.ceil_div(num, den) - 1) * den
    assert rta.ceil0(num, den) == (rta.ceil_div(num, den) if num > 0 else 0)


def test_table1_classification(table1):
    m1, m2 = table1.modes
    c = rta.classify(m1, m2)
    assert c == {1: TC.UNCHANGED, 2: TC.WHOLLY_NEW, 3: TC.CHANGED, 4: TC.UNCHANGED,
                 5: TC.CHANGED, 6: TC.COMPLETED}
    back = rta.classify(m2, m1)
    assert back == {1: TC.UNCHANGED, 2: TC.COMPLETED, 3: TC.CHANGED, 4: TC.UNCHANGED,
                    5: TC.CHANGED, 6: TC.WHOLLY_NEW}
    assert rta.classify(m1, m2, abort=True)[6] is TC.ABORTED


def test_table1_latencies(table1):
    m1, m2 = table1.modes
    a = rta.analyze_transition(m1, m2)
    assert a.latency == 420 and a.critical_task == 5
    # the first new-mode job of task 5 overruns its deadline during the change
    assert a.new_results[5].R == 420 > 350
    assert rta.mode_change_latency(m2, m1) == 450


def test_identity_transition_latency_is_max_steady_response(table1):
    m1 = table1.modes[0]
    same = ModeSpec("M1b", tuple(TaskSpec(t.id, t.period, t.deadline, t.wcet_lo,
                                          t.priority_lo) for t in m1.tasks))
    a = rta.analyze_transition(m1, same)
    assert set(a.classes.values()) == {TC.UNCHANGED}
    assert a.latency == max(rta.steady_state_wcrt(m1, t).R for t in m1.ids)
    for tid, res in a.old_results.items():
        assert res.R == rta.steady_state_wcrt(m1, tid).R


def test_unbounded_transition_raises():
    old = ModeSpec("A", (TaskSpec(1, 100, 100, 90, 1),))
    new = ModeSpec("B", (TaskSpec(2, 100, 100, 95, 1),))
    a = rta.analyze_transition(old, new, offsets={2: 0})
    assert a.new_results[2].R > 100
    heavy = ModeSpec("C", (TaskSpec(2, 10, 10, 9, 1), TaskSpec(3, 10, 10, 9, 2)))
    with pytest.raises(rta.InfeasibleError):
        rta.mode_change_latency(old, heavy, offsets={2: 0, 3: 0})


def test_transition_priority_is_deadline_monotonic():
    from mcsched.core import ModeTask
    a, b = ModeTask(1, 10, 100, 100, 1), ModeTask(2, 10, 200, 200, 1)
    assert rta.transition_priority(a, "new") < rta.transition_priority(b, "old")
    assert rta.transition_priority(a, "old") < rta.transition_priority(a, "new")


def test_wholly_new_offset_delays_first_job():
    old = ModeSpec("A", (TaskSpec(1, 100, 100, 10, 1),))
    new = ModeSpec("B", (TaskSpec(1, 100, 100, 10, 1), TaskSpec(2, 200, 200, 20, 2)))
    early = rta.analyze_transition(old, new, offsets={1: 0, 2: 0}).new_results[2]
    late = rta.analyze_transition(old, new, offsets={1: 0, 2: 50}).new_results[2]
    assert late.completion >= early.completion

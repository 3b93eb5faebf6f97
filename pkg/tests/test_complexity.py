import pickle

import pytest

from satrx.complexity import (
    TABLE_I,
    TABLE_II,
    ComplexityLedger,
    c_jml,
    c_rc_percent,
    c_save_percent,
    closed_form_c,
    complexity_table,
    reconcile,
)


def test_frozen_operation_counts():
    assert closed_form_c(3, (2, 1, 2), 8, (3, 2)) == 113_408
    assert closed_form_c(3, (2, 1, 3), 8, (3, 2)) == 166_656
    assert c_jml(3, 5, 8) == 196_608
    assert c_jml(3, 5, 16) == 6_291_456


def test_hand_expansion_of_one_row():
    # 2 * I_GLB * (M * I_BLE * (8**3 + 8**2) + I_GLO * L * (3 * 8**3 + 2 * 8**2))
    assert closed_form_c(3, (2, 1, 2), 8, (3, 2)) == 2 * 2 * (3 * 576 + 2 * 8 * 1664)


def test_r_term_conventions():
    base = closed_form_c(3, (2, 1, 1), 8, (3, 2))
    assert closed_form_c(3, (2, 1, 1), 8, (3, 2), r_values=10) == base + 2 * 2 * 10
    assert closed_form_c(3, (2, 1, 1), 8, (3, 2), r_values=[10, 30]) == base + 2 * 40


def test_saving_estimates_agree_without_r():
    save = c_save_percent((2, 1, 2), 5, 3, 8, (3, 2))
    assert save.exact == pytest.approx(save.approx)
    assert save.exact == pytest.approx(3.9, abs=0.05)
    with_r = c_save_percent((2, 1, 2), 5, 3, 8, (3, 2), r_values=50)
    assert with_r.exact < with_r.approx


@pytest.mark.parametrize("it", sorted(TABLE_I))
def test_table_one_rows(it):
    (row,) = complexity_table([it])
    save, rc = TABLE_I[it]
    assert row.c_rc == pytest.approx(rc, abs=0.1)
    assert row.c_save_exact == pytest.approx(save, abs=0.1)


def test_table_two_savings_match():
    for row in complexity_table(list(TABLE_II), k=16):
        assert row.c_save_exact == pytest.approx(TABLE_II[row.iterations][0], abs=0.1)


def test_c_rc_and_validation():
    assert c_rc_percent(50, 200) == 25.0
    with pytest.raises(ValueError):
        c_rc_percent(1, 0)
    with pytest.raises(ValueError):
        c_jml(0, 5, 8)
    with pytest.raises(ValueError):
        closed_form_c(3, (0, 1, 1), 8, (3, 2))
    with pytest.raises(OverflowError):
        c_jml(3, 40, 16)


def _ledger(r, lvs, det=1):
    led = ComplexityLedger(detections=det, ble_branches=3)
    led.start_global(r)
    for lv in lvs:
        led.start_glo_iteration()
        for v in lv:
            led.record_lv(v)
    return led


def test_ledger_merge_and_mean():
    a = _ledger(10, [[4, 6], [2, 2]])
    b = _ledger(20, [[6, 6], [4, 2]])
    m = a.merge(b)
    assert m.detections == 2
    assert m.sort_unique_r == [30]
    assert m.r_squarings == 60
    assert m.per_iteration_lv == [[[10, 12], [6, 4]]]
    assert m.mean_lv() == [4.0, 4.0]
    assert ComplexityLedger().merge(a).per_iteration_lv == a.per_iteration_lv


def test_ledger_pickles():
    led = _ledger(3, [[1, 1]])
    back = pickle.loads(pickle.dumps(led))
    assert back.sort_unique_r == [3]
    back.add_ble(5)
    assert back.ble_squarings == 5


def test_reconcile_counts_terms():
    led = _ledger(5, [[2, 3]])
    led.add_ble(2 * 3 * (8**3 + 8**2))
    led.add_glo(2 * (2 * 3 * 8**3 + 3 * 2 * 8**2))
    rec = reconcile(led, (1, 1, 1), 8, (3, 2))
    assert rec.exact
    led.add_glo(1)
    assert reconcile(led, (1, 1, 1), 8, (3, 2)).glo_difference == 1

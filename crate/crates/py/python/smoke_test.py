"""Smoke test for the compiled module; run after `maturin develop` or installing the wheel."""

import math

import polylab


def main():
    k = polylab.StepKernel(2, 1)
    assert k.omega == 8
    assert abs(k.d_hat([0.0, 0.0]) - 1.0) < 1e-15

    m = polylab.so_mass(1, 1, 0.8)["m"]
    assert abs(m - math.acosh(1 / 0.8)) < 1e-12

    counts = polylab.enumerate_counts(2, 1, 4, "tree")
    assert counts["t_n"] == [1, 4, 28, 240, 2270]
    assert polylab.two_point_series(1, 1, 6, [1]) == [0, 1, 2, 3, 4, 5, 6]
    assert polylab.susceptibility_series(1, 1, 4) == [1, 4, 9, 16, 25]

    rep = polylab.sandwich_check(1, 1, 3, 5, [1], "1/8")
    assert rep["holds"] and rep["difference_value"] == "3259/1048576"

    audit = polylab.lift_audit(1, 1, 3, 4, "animal")
    assert audit["passed"]

    s = polylab.green_field(2, 1, 0.5, 32)
    assert abs(s.sum() - 2.0) < 1e-10
    box = s.to_box(6)
    spec = {"factors": [{"kind": "field", "name": "S"}, {"kind": "field", "name": "S"}], "reduction": "at_origin"}
    bubble = polylab.eval_diagram(spec, {"S": box}, 1.0)["value"]
    assert abs(bubble - sum(v * v for v in box.values())) < 1e-12

    i0 = polylab.faxen_i0(0.0)["i0"]
    assert abs(i0 - math.gamma(0.25) / 4 ** 0.75) < 1e-9
    w = polylab.window_prediction(9, 3)
    assert (w["window_exponent"], w["chi_exponent"], w["plateau_exponent"]) == ("-1/2", "1/4", "-3/4")

    try:
        polylab.sandwich_check(1, 1, 3, 5, [1], "0.125")
    except ValueError:
        pass
    else:
        raise AssertionError("floating-point activity accepted")
    try:
        polylab.enumerate_counts(2, 1, 6, "animal", budget=100)
    except polylab.BudgetExceeded:
        pass
    else:
        raise AssertionError("budget not enforced")
    print("smoke test passed")


if __name__ == "__main__":
    main()

import re

_CRITERIA = {
    1: "2D stress rows: torsion-free, single-potential second-order parametrization",
    2: "3D stress rows: 6-potential parametrization, self-adjoint in classical form",
    3: "diagonal and corner 3-potential subsets regenerate the 3D stress rows",
    4: "trace-corrected curvature n=4: self-adjoint, torsion, 20 extra relations",
    5: "double pendulum: injective adjoint, order-4 parametrization, equal-length torsion",
    6: "RLC circuit: generic freeness with pivot, specialized torsion y - u",
    7: "parameter trichotomy of the first-order OD pair",
    8: "hidden torsion element annihilated by d3, closure generated by two relations",
    9: "order-jumping pair: both parameter branches, dimensions and chains",
    10: "variable-coefficient row: all parametrizations and the reflexive pattern",
    11: "contact system: displayed relation, injective parametrization, flat torsion",
    12: "planar couple-stress rows: first-order 3-potential parametrization",
    13: "adjoint relations strictly outgrow the second-order pair",
    14: "involutive layer: leaders, tabular, parametric counts, prolongation order",
    15: "property suites: adjoint laws, exactness, oracle and localization agreement",
    16: "optional: trace-free conformal rows, third-order self-adjoint relations",
}

_RESULTS: dict[int, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    m = re.search(r"test_acceptance\.py::test_c(\d+)", report.nodeid)
    if not m:
        return
    num = int(m.group(1))
    _RESULTS[num] = "PASS" if report.passed else ("FAIL" if report.failed else "SKIP")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tw = terminalreporter
    tw.write_sep("-", "acceptance criteria")
    for num in sorted(_RESULTS):
        desc = _CRITERIA.get(num, "")
        tw.write_line(f"criterion {num:2d} [{_RESULTS[num]}] {desc}")

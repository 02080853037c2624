from smpsde import catalog, checks
from smpsde.layout import MarkResolution
from smpsde.rates import Constant, RateModel


def understated():
    # the declared sup-norm of (1,2) is 1 while the rate is 2: the layout
    # clips state 1's interval, so the sampler realizes rate 1
    return RateModel(2, {(1, 2): Constant(2.0), (2, 1): Constant(3.0)}, [[0, 1], [3, 0]])


def test_holding_law_suite_detects_clipped_layout():
    model = understated()
    verdicts = checks.holding_law_suite(model, MarkResolution(model), 0, samples=20_000)
    by_name = {v.name: v.passed for v in verdicts}
    assert by_name == {"holding_law/state1/n0": False, "holding_law/state2/n0": True}


def test_validation_and_layout_suites_flag_it():
    model = understated()
    assert not checks.validation_suite(model)[0].passed
    failed = {v.name for v in checks.layout_suite(MarkResolution(model), samples=500) if not v.passed}
    assert {"layout/disjoint", "layout/containment"} <= failed


def test_catalog_passes_cheap_suites():
    for name in catalog.CATALOG:
        model = catalog.build(name)
        res = MarkResolution(model)
        verdicts = checks.validation_suite(model) + checks.identity_suite(model) + checks.instantaneous_rate_suite(model)
        verdicts += checks.layout_suite(res, samples=300)
        assert all(v.passed for v in verdicts), [v.line() for v in verdicts if not v.passed]


def test_counts_to_test():
    assert checks.counts_to_test(catalog.ctmc2()) == (0,)
    assert checks.counts_to_test(catalog.ndecay()) == (0, 1, 3)

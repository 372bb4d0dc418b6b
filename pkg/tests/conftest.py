from pathlib import Path

import pytest
from hypothesis import strategies as st

from nrcsb.core import (
    BagComp,
    BagUnion,
    Const,
    Dedup,
    EmptyBag,
    EmptySet,
    Project,
    Promote,
    Record,
    SetComp,
    SingletonBag,
    SingletonSet,
    Union,
    Var,
    WhereBag,
    WhereSet,
)

SAMPLES = Path(__file__).resolve().parent.parent / "samples"

NAMES = ("x", "y", "z", "x1")


@pytest.fixture
def samples() -> Path:
    return SAMPLES


def _extend(children):
    name = st.sampled_from(NAMES)
    label = st.sampled_from(("a", "b"))
    return st.one_of(
        st.builds(Record, st.lists(st.tuples(label, children), max_size=2, unique_by=lambda p: p[0]).map(tuple)),
        st.builds(Project, children, label),
        st.builds(WhereSet, children, children),
        st.builds(WhereBag, children, children),
        st.builds(SingletonSet, children),
        st.builds(SingletonBag, children),
        st.builds(Union, children, children),
        st.builds(BagUnion, children, children),
        st.builds(SetComp, children, name, children),
        st.builds(BagComp, children, name, children),
        st.builds(Dedup, children),
        st.builds(Promote, children),
        st.builds(lambda a, b: Const("=", (a, b)), children, children),
    )


# untyped terms over a few names; enough for binding-structure properties
raw_terms = st.recursive(
    st.one_of(
        st.builds(Var, st.sampled_from(NAMES)),
        st.sampled_from((Const("1"), Const("true"), EmptySet(), EmptyBag())),
    ),
    _extend,
    max_leaves=12,
)

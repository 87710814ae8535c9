import pytest

from config.layouts import get_layout
from core.joint_matcher import JointMatcher, normalize_joint_name, suggest


@pytest.mark.parametrize('name', ['LEFT_ELBOW', 'LElbow', 'ElbowLeft', 'elbow_left', 'left-elbow'])
def test_spellings_of_one_joint(name):
    assert normalize_joint_name(name) == 'left elbow'


def test_part_aliases():
    assert normalize_joint_name('SpineBase') == 'spine base'
    assert normalize_joint_name('pelvis') == 'spine base'
    assert normalize_joint_name('HandTipRight') == 'right hand tip'
    assert normalize_joint_name('') == ''


def test_matcher_exact_and_fuzzy():
    matcher = JointMatcher(get_layout('ntu25'))
    layout = matcher.layout
    assert matcher.match('ShoulderLeft') == layout.joint_index('shoulder_left')
    assert matcher.match('left sholder') == layout.joint_index('shoulder_left')
    assert matcher.match('tail') is None


def test_map_names_keeps_the_first_duplicate():
    matcher = JointMatcher(get_layout('ntu25'))
    mapping = matcher.map_names(['Head', 'head', 'Tail'])
    assert mapping == {'Head': matcher.layout.joint_index('head')}
    assert 'head' not in matcher.missing(mapping)
    assert len(matcher.missing(mapping)) == 24


def test_suggest():
    assert suggest('prat', ['full', 'part', 'core']) == 'part'
    assert suggest('zzzz', ['full', 'part', 'core']) is None
    assert suggest('', ['full']) is None

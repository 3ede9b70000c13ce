from fractions import Fraction

import pytest

from ocmdp.model import parse_mdp, parse_ocmdp

W1_TEMPLATE = """ocmdp
state q P
zrule q 0 q 1/1
prule q +1 q %s
prule q -1 q %s
"""


def w1_text(up: Fraction) -> str:
    down = 1 - up
    return W1_TEMPLATE % ("%d/%d" % (up.numerator, up.denominator),
                          "%d/%d" % (down.numerator, down.denominator))


ST_EXAMPLE = """ocmdp
state p N
state r P
state s P
zrule p +1 p
zrule r 0 r 1/1
zrule s 0 s 1/1
prule p +1 p
prule p 0 r
prule r 0 s 1/2
prule r -1 r 1/2
prule s -1 s 1/1
final s
"""

T2_FIXTURE = """ocmdp
state c N
state s P
state r P
zrule c 0 c
zrule s 0 s 1/1
zrule r 0 r 1/1
prule c -1 s
prule c -1 r
prule c +1 c
prule s -1 s 1/1
prule r +1 r 1/1
final s
"""

INCREMENTER = """ocmdp
state t N
zrule t +1 t
prule t +1 t
"""

E6 = """mdp
vertex u N r=0
vertex a P r=-1
vertex b P r=1
edge u a
edge u b
edge a u 1/1
edge b u 1/1
"""


def qbd_text(p: Fraction) -> str:
    q = 1 - p
    return """ocmdp
state s1 P
state s2 P
zrule s1 0 s1 1/1
zrule s2 0 s2 1/1
prule s1 +1 s1 %d/%d
prule s1 +1 s2 %d/%d
prule s2 -1 s2 1/1
""" % (q.numerator, q.denominator, p.numerator, p.denominator)


@pytest.fixture
def w1():
    return parse_ocmdp(w1_text(Fraction(1, 3)))


@pytest.fixture
def w1_up():
    return parse_ocmdp(w1_text(Fraction(2, 3)))


@pytest.fixture
def st_example():
    return parse_ocmdp(ST_EXAMPLE)


@pytest.fixture
def t2():
    return parse_ocmdp(T2_FIXTURE)


@pytest.fixture
def incrementer():
    return parse_ocmdp(INCREMENTER)


@pytest.fixture
def e6():
    return parse_mdp(E6)


@pytest.fixture
def qbd_quarter():
    return parse_ocmdp(qbd_text(Fraction(1, 4)))

use core::cmp::Ordering;
use core::fmt;

/// One end of an interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bound {
    NegInf,
    Finite(i64),
    PosInf,
}

impl Bound {
    fn rank(self) -> (i8, i64) {
        match self {
            Bound::NegInf => (-1, 0),
            Bound::Finite(v) => (0, v),
            Bound::PosInf => (1, 0),
        }
    }

    pub fn finite(self) -> Option<i64> {
        match self {
            Bound::Finite(v) => Some(v),
            _ => None,
        }
    }

    fn from_wide(v: i128) -> Bound {
        if v > i64::MAX as i128 {
            Bound::PosInf
        } else if v < i64::MIN as i128 {
            Bound::NegInf
        } else {
            Bound::Finite(v as i64)
        }
    }

    fn neg(self) -> Bound {
        match self {
            Bound::NegInf => Bound::PosInf,
            Bound::PosInf => Bound::NegInf,
            Bound::Finite(v) => Bound::from_wide(-(v as i128)),
        }
    }

    fn signum(self) -> i8 {
        match self {
            Bound::NegInf => -1,
            Bound::PosInf => 1,
            Bound::Finite(v) => v.signum() as i8,
        }
    }

    fn add(self, o: Bound) -> Bound {
        match (self, o) {
            (Bound::Finite(a), Bound::Finite(b)) => Bound::from_wide(a as i128 + b as i128),
            (Bound::NegInf, _) | (_, Bound::NegInf) => Bound::NegInf,
            _ => Bound::PosInf,
        }
    }

    fn mul(self, o: Bound) -> Bound {
        match (self, o) {
            (Bound::Finite(a), Bound::Finite(b)) => Bound::from_wide(a as i128 * b as i128),
            _ => match self.signum() * o.signum() {
                0 => Bound::Finite(0),
                s if s > 0 => Bound::PosInf,
                _ => Bound::NegInf,
            },
        }
    }

    /// Quotient of corners; the divisor is never zero.
    fn div(self, o: Bound) -> Bound {
        match (self, o) {
            (Bound::Finite(a), Bound::Finite(b)) => Bound::from_wide(a as i128 / b as i128),
            (Bound::Finite(_), _) => Bound::Finite(0),
            (_, Bound::Finite(b)) => {
                if (self.signum() > 0) == (b > 0) {
                    Bound::PosInf
                } else {
                    Bound::NegInf
                }
            }
            _ => Bound::Finite(0),
        }
    }
}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Bound {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::NegInf => f.write_str("-inf"),
            Bound::PosInf => f.write_str("+inf"),
            Bound::Finite(v) => write!(f, "{v}"),
        }
    }
}

/// A possibly unbounded integer interval. The empty interval has one
/// representation, [`Interval::EMPTY`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Bound,
    hi: Bound,
}

impl Interval {
    pub const EMPTY: Interval = Interval {
        lo: Bound::PosInf,
        hi: Bound::NegInf,
    };
    pub const TOP: Interval = Interval {
        lo: Bound::NegInf,
        hi: Bound::PosInf,
    };
    pub const BOOL: Interval = Interval {
        lo: Bound::Finite(0),
        hi: Bound::Finite(1),
    };
    pub const FALSE: Interval = Interval::constant(0);
    pub const TRUE: Interval = Interval::constant(1);

    pub fn new(lo: Bound, hi: Bound) -> Interval {
        if lo > hi || lo == Bound::PosInf || hi == Bound::NegInf {
            Interval::EMPTY
        } else {
            Interval { lo, hi }
        }
    }

    /// Like [`Interval::new`] for results of arithmetic on non-empty inputs,
    /// where a saturated bound must not empty the interval.
    fn saturated(lo: Bound, hi: Bound) -> Interval {
        let lo = if lo == Bound::PosInf {
            Bound::Finite(i64::MAX)
        } else {
            lo
        };
        let hi = if hi == Bound::NegInf {
            Bound::Finite(i64::MIN)
        } else {
            hi
        };
        Interval::new(lo, hi)
    }

    pub const fn constant(v: i64) -> Interval {
        Interval {
            lo: Bound::Finite(v),
            hi: Bound::Finite(v),
        }
    }

    pub fn range(lo: i64, hi: i64) -> Interval {
        Interval::new(Bound::Finite(lo), Bound::Finite(hi))
    }

    pub fn lo(&self) -> Bound {
        self.lo
    }

    pub fn hi(&self) -> Bound {
        self.hi
    }

    pub fn is_empty(&self) -> bool {
        *self == Interval::EMPTY
    }

    pub fn is_top(&self) -> bool {
        *self == Interval::TOP
    }

    pub fn as_constant(&self) -> Option<i64> {
        match (self.lo, self.hi) {
            (Bound::Finite(a), Bound::Finite(b)) if a == b => Some(a),
            _ => None,
        }
    }

    pub fn contains(&self, v: i64) -> bool {
        !self.is_empty() && self.lo <= Bound::Finite(v) && Bound::Finite(v) <= self.hi
    }

    pub fn leq(&self, o: &Interval) -> bool {
        self.is_empty() || (!o.is_empty() && o.lo <= self.lo && self.hi <= o.hi)
    }

    pub fn join(&self, o: &Interval) -> Interval {
        if self.is_empty() {
            return *o;
        }
        if o.is_empty() {
            return *self;
        }
        Interval {
            lo: self.lo.min(o.lo),
            hi: self.hi.max(o.hi),
        }
    }

    pub fn meet(&self, o: &Interval) -> Interval {
        if self.is_empty() || o.is_empty() {
            return Interval::EMPTY;
        }
        Interval::new(self.lo.max(o.lo), self.hi.min(o.hi))
    }

    pub fn widen(&self, o: &Interval) -> Interval {
        if self.is_empty() {
            return *o;
        }
        if o.is_empty() {
            return *self;
        }
        Interval {
            lo: if o.lo < self.lo { Bound::NegInf } else { self.lo },
            hi: if o.hi > self.hi { Bound::PosInf } else { self.hi },
        }
    }

    /// Refines infinite bounds of `self` with those of `o`.
    pub fn narrow(&self, o: &Interval) -> Interval {
        if self.is_empty() || o.is_empty() {
            return Interval::EMPTY;
        }
        Interval::new(
            if self.lo == Bound::NegInf { o.lo } else { self.lo },
            if self.hi == Bound::PosInf { o.hi } else { self.hi },
        )
    }

    pub fn neg(&self) -> Interval {
        if self.is_empty() {
            return Interval::EMPTY;
        }
        Interval::saturated(self.hi.neg(), self.lo.neg())
    }

    pub fn add(&self, o: &Interval) -> Interval {
        if self.is_empty() || o.is_empty() {
            return Interval::EMPTY;
        }
        Interval::saturated(self.lo.add(o.lo), self.hi.add(o.hi))
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        self.add(&o.neg())
    }

    fn corners(&self, o: &Interval, f: impl Fn(Bound, Bound) -> Bound) -> Interval {
        let c = [f(self.lo, o.lo), f(self.lo, o.hi), f(self.hi, o.lo), f(self.hi, o.hi)];
        let lo = c.iter().copied().min().unwrap();
        let hi = c.iter().copied().max().unwrap();
        Interval::saturated(lo, hi)
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        if self.is_empty() || o.is_empty() {
            return Interval::EMPTY;
        }
        self.corners(o, Bound::mul)
    }

    /// Truncating division; a divisor range containing zero gives top.
    pub fn div(&self, o: &Interval) -> Interval {
        if self.is_empty() || o.is_empty() {
            return Interval::EMPTY;
        }
        if o.contains(0) {
            return Interval::TOP;
        }
        self.corners(o, Bound::div)
    }

    fn truth(always: bool, never: bool) -> Interval {
        match (always, never) {
            (true, _) => Interval::TRUE,
            (_, true) => Interval::FALSE,
            _ => Interval::BOOL,
        }
    }

    pub fn lt(&self, o: &Interval) -> Interval {
        if self.is_empty() || o.is_empty() {
            return Interval::EMPTY;
        }
        Interval::truth(self.hi < o.lo, self.lo >= o.hi)
    }

    pub fn le(&self, o: &Interval) -> Interval {
        if self.is_empty() || o.is_empty() {
            return Interval::EMPTY;
        }
        Interval::truth(self.hi <= o.lo, self.lo > o.hi)
    }

    pub fn eq_(&self, o: &Interval) -> Interval {
        if self.is_empty() || o.is_empty() {
            return Interval::EMPTY;
        }
        let same_const = self.as_constant().is_some() && self.as_constant() == o.as_constant();
        Interval::truth(same_const, self.meet(o).is_empty())
    }

    pub fn ne_(&self, o: &Interval) -> Interval {
        self.eq_(o).not()
    }

    /// Logical negation on the boolean embedding (nonzero is true).
    pub fn not(&self) -> Interval {
        if self.is_empty() {
            return Interval::EMPTY;
        }
        let t = self.truthiness();
        Interval::truth(t == Some(false), t == Some(true))
    }

    /// `Some(b)` when every value has truth value `b`.
    pub fn truthiness(&self) -> Option<bool> {
        if self.is_empty() {
            None
        } else if *self == Interval::FALSE {
            Some(false)
        } else if !self.contains(0) {
            Some(true)
        } else {
            None
        }
    }

    pub fn and(&self, o: &Interval) -> Interval {
        if self.is_empty() || o.is_empty() {
            return Interval::EMPTY;
        }
        let (a, b) = (self.truthiness(), o.truthiness());
        Interval::truth(a == Some(true) && b == Some(true), a == Some(false) || b == Some(false))
    }

    pub fn or(&self, o: &Interval) -> Interval {
        if self.is_empty() || o.is_empty() {
            return Interval::EMPTY;
        }
        let (a, b) = (self.truthiness(), o.truthiness());
        Interval::truth(a == Some(true) || b == Some(true), a == Some(false) && b == Some(false))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            f.write_str("[]")
        } else {
            write!(f, "[{},{}]", self.lo, self.hi)
        }
    }
}

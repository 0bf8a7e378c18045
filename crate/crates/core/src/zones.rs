//! Difference bound matrices.
//!
//! Entry `(i, j)` bounds `x_i - x_j`; index 0 is the constant-zero reference
//! clock. Bounds are packed as `(value << 1) | non_strict`, so comparing two
//! packed bounds as integers orders them from tightest to loosest.

use std::fmt::{self, Write as _};

use crate::model::TimeInterval;
use crate::time::Time;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ZoneError {
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// An upper bound `≤ v` or `< v` on a clock difference, or `< ∞`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bound(i64);

impl Bound {
    pub const INF: Bound = Bound(i64::MAX);
    pub const LE_ZERO: Bound = Bound(1);
    pub const LT_ZERO: Bound = Bound(0);

    pub const fn le(v: Time) -> Bound {
        Bound((v.ticks() << 1) | 1)
    }

    pub const fn lt(v: Time) -> Bound {
        Bound(v.ticks() << 1)
    }

    pub fn is_infinite(self) -> bool {
        self == Bound::INF
    }

    pub fn is_strict(self) -> bool {
        !self.is_infinite() && self.0 & 1 == 0
    }

    /// Finite value, `None` for infinity.
    pub fn value(self) -> Option<Time> {
        (!self.is_infinite()).then(|| Time::from_ticks(self.0 >> 1))
    }

    pub fn raw(self) -> i64 {
        self.0
    }

    #[inline]
    fn add(self, other: Bound) -> Bound {
        if self == Bound::INF || other == Bound::INF {
            Bound::INF
        } else {
            Bound((((self.0 >> 1) + (other.0 >> 1)) << 1) | (self.0 & other.0 & 1))
        }
    }
}

impl fmt::Debug for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            None => f.write_str("<inf"),
            Some(v) if self.is_strict() => write!(f, "<{v}"),
            Some(v) => write!(f, "<={v}"),
        }
    }
}

/// A zone over `n` clocks, stored as an `(n+1) x (n+1)` row-major matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dbm {
    dim: usize,
    entries: Vec<Bound>,
    canonical: bool,
}

impl Dbm {
    /// All clocks equal to zero.
    pub fn zero(n: usize) -> Dbm {
        let dim = n + 1;
        Dbm { dim, entries: vec![Bound::LE_ZERO; dim * dim], canonical: true }
    }

    /// All non-negative valuations.
    pub fn unconstrained(n: usize) -> Dbm {
        let dim = n + 1;
        let mut entries = vec![Bound::INF; dim * dim];
        for j in 0..dim {
            entries[j] = Bound::LE_ZERO;
            entries[j * dim + j] = Bound::LE_ZERO;
        }
        Dbm { dim, entries, canonical: true }
    }

    /// Builds an arbitrary, not yet canonical matrix from rows. Diagonal
    /// entries are forced to `<= 0`.
    pub fn from_rows(rows: &[Vec<Bound>]) -> Result<Dbm, ZoneError> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(ZoneError::InvalidArgument("matrix must be square and non-empty".into()));
        }
        let mut entries: Vec<Bound> = rows.iter().flatten().copied().collect();
        for i in 0..dim {
            entries[i * dim + i] = Bound::LE_ZERO;
        }
        Ok(Dbm { dim, entries, canonical: false })
    }

    pub fn clocks(&self) -> usize {
        self.dim - 1
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Bound {
        self.entries[i * self.dim + j]
    }

    /// Overwrites one entry; the result is no longer known to be canonical.
    pub fn set(&mut self, i: usize, j: usize, b: Bound) {
        self.entries[i * self.dim + j] = b;
        self.canonical = false;
    }

    fn check_clock(&self, c: usize) -> Result<(), ZoneError> {
        if c == 0 || c >= self.dim {
            return Err(ZoneError::InvalidArgument(format!("no clock {c} in a zone of {} clocks", self.clocks())));
        }
        Ok(())
    }

    fn require_canonical(&self) -> Result<(), ZoneError> {
        if self.canonical {
            Ok(())
        } else {
            Err(ZoneError::Precondition("zone is not canonical"))
        }
    }

    fn require_non_empty(&self) -> Result<(), ZoneError> {
        self.require_canonical()?;
        if self.empty_flag() {
            Err(ZoneError::Precondition("zone is empty"))
        } else {
            Ok(())
        }
    }

    fn empty_flag(&self) -> bool {
        (0..self.dim).any(|i| self.get(i, i) < Bound::LE_ZERO)
    }

    /// Tightens every entry to its shortest-path bound.
    pub fn canonicalize(&mut self) {
        let dim = self.dim;
        let e = &mut self.entries;
        for k in 0..dim {
            for i in 0..dim {
                let ik = e[i * dim + k];
                if ik == Bound::INF {
                    continue;
                }
                for j in 0..dim {
                    let via = ik.add(e[k * dim + j]);
                    if via < e[i * dim + j] {
                        e[i * dim + j] = via;
                    }
                }
            }
        }
        if (0..dim).any(|i| e[i * dim + i] < Bound::LE_ZERO) {
            // One representation for every empty zone.
            e.fill(Bound::LT_ZERO);
        }
        self.canonical = true;
    }

    pub fn canonical(&self) -> Dbm {
        let mut d = self.clone();
        d.canonicalize();
        d
    }

    pub fn is_empty(&self) -> Result<bool, ZoneError> {
        self.require_canonical()?;
        Ok(self.empty_flag())
    }

    /// Lets time elapse: removes every upper bound.
    pub fn up(&mut self) -> Result<(), ZoneError> {
        self.require_non_empty()?;
        for i in 1..self.dim {
            self.entries[i * self.dim] = Bound::INF;
        }
        Ok(())
    }

    /// Sets clock `c` to zero.
    pub fn reset(&mut self, c: usize) -> Result<(), ZoneError> {
        self.check_clock(c)?;
        self.require_non_empty()?;
        let dim = self.dim;
        for j in 0..dim {
            self.entries[c * dim + j] = self.entries[j];
            self.entries[j * dim + c] = self.entries[j * dim];
        }
        self.entries[c * dim + c] = Bound::LE_ZERO;
        Ok(())
    }

    /// Intersects with `x_i - x_j ≺ b`. Returns whether the result is non-empty.
    pub fn constrain(&mut self, i: usize, j: usize, b: Bound) -> Result<bool, ZoneError> {
        if i >= self.dim || j >= self.dim {
            return Err(ZoneError::InvalidArgument(format!("index ({i}, {j}) out of range")));
        }
        self.require_canonical()?;
        if self.empty_flag() {
            return Ok(false);
        }
        let dim = self.dim;
        if b >= self.get(i, j) {
            return Ok(true);
        }
        if b.add(self.get(j, i)) < Bound::LE_ZERO {
            self.entries.fill(Bound::LT_ZERO);
            return Ok(false);
        }
        self.entries[i * dim + j] = b;
        // Only paths through the new edge can improve.
        let col_i: Vec<Bound> = (0..dim).map(|k| self.entries[k * dim + i]).collect();
        let row_j: Vec<Bound> = self.entries[j * dim..(j + 1) * dim].to_vec();
        for (k, &ki) in col_i.iter().enumerate() {
            if ki == Bound::INF {
                continue;
            }
            let kib = ki.add(b);
            for (l, &jl) in row_j.iter().enumerate() {
                let via = kib.add(jl);
                if via < self.entries[k * dim + l] {
                    self.entries[k * dim + l] = via;
                }
            }
        }
        Ok(true)
    }

    /// Constrains clock `c` to the closed interval `iv`.
    pub fn constrain_interval(&mut self, c: usize, iv: TimeInterval) -> Result<bool, ZoneError> {
        if !self.constrain(0, c, Bound::le(Time::ZERO - iv.lo))? {
            return Ok(false);
        }
        if iv.hi.is_infinite() {
            return Ok(true);
        }
        self.constrain(c, 0, Bound::le(iv.hi))
    }

    /// Whether `other ⊆ self`, by entrywise comparison.
    pub fn includes(&self, other: &Dbm) -> Result<bool, ZoneError> {
        if self.dim != other.dim {
            return Err(ZoneError::InvalidArgument(format!(
                "dimension mismatch: {} vs {} clocks",
                self.clocks(),
                other.clocks()
            )));
        }
        self.require_canonical()?;
        other.require_canonical()?;
        if other.empty_flag() {
            return Ok(true);
        }
        if self.empty_flag() {
            return Ok(false);
        }
        Ok(self.entries.iter().zip(&other.entries).all(|(a, b)| a >= b))
    }

    /// Range of clock `c` over the zone. Strictness is dropped.
    pub fn clock_bounds(&self, c: usize) -> Result<TimeInterval, ZoneError> {
        self.check_clock(c)?;
        self.require_non_empty()?;
        Ok(self.range_of(c, 0))
    }

    /// Range of `x_i - x_j` over the zone.
    pub fn difference_bounds(&self, i: usize, j: usize) -> Result<TimeInterval, ZoneError> {
        if i >= self.dim || j >= self.dim {
            return Err(ZoneError::InvalidArgument(format!("index ({i}, {j}) out of range")));
        }
        self.require_non_empty()?;
        Ok(self.range_of(i, j))
    }

    fn range_of(&self, i: usize, j: usize) -> TimeInterval {
        let lo = self.get(j, i).value().map_or(Time::from_ticks(i64::MIN / 4), |v| Time::ZERO - v);
        let hi = self.get(i, j).value().unwrap_or(Time::INFINITY);
        TimeInterval { lo, hi }
    }

    /// Adds a clock at position `pos` (1-based) equal to zero.
    pub fn insert_zero_clock(&mut self, pos: usize) {
        assert!(pos >= 1 && pos <= self.dim, "clock position {pos} out of range");
        let old = self.dim;
        let dim = old + 1;
        let mut entries = Vec::with_capacity(dim * dim);
        let src = |i: usize| {
            if i < pos {
                i
            } else if i == pos {
                0
            } else {
                i - 1
            }
        };
        for i in 0..dim {
            for j in 0..dim {
                entries.push(if i == j { Bound::LE_ZERO } else { self.entries[src(i) * old + src(j)] });
            }
        }
        self.dim = dim;
        self.entries = entries;
    }

    /// Projects clock `pos` away. Canonical forms stay canonical.
    pub fn remove_clock(&mut self, pos: usize) {
        assert!(pos >= 1 && pos < self.dim, "clock position {pos} out of range");
        let old = self.dim;
        let mut entries = Vec::with_capacity((old - 1) * (old - 1));
        for i in (0..old).filter(|&i| i != pos) {
            for j in (0..old).filter(|&j| j != pos) {
                entries.push(self.entries[i * old + j]);
            }
        }
        self.dim = old - 1;
        self.entries = entries;
    }

    /// Renames clocks: clock `i` of the result is clock `order[i - 1]` of
    /// `self`. `order` must be a permutation of `1..=clocks()`.
    pub fn permute(&self, order: &[usize]) -> Dbm {
        assert_eq!(order.len() + 1, self.dim, "permutation length");
        let src = |i: usize| if i == 0 { 0 } else { order[i - 1] };
        let mut entries = Vec::with_capacity(self.entries.len());
        for i in 0..self.dim {
            for j in 0..self.dim {
                entries.push(self.entries[src(i) * self.dim + src(j)]);
            }
        }
        Dbm { dim: self.dim, entries, canonical: self.canonical }
    }

    /// Matrix listing with named rows and columns; `names` excludes the
    /// reference clock.
    pub fn dump(&self, names: &[&str]) -> String {
        let label = |i: usize| {
            if i == 0 {
                "0"
            } else {
                names.get(i - 1).copied().unwrap_or("?")
            }
        };
        let cells: Vec<Vec<String>> =
            (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j).to_string()).collect()).collect();
        let width =
            cells.iter().flatten().map(String::len).chain((0..self.dim).map(|i| label(i).len())).max().unwrap_or(1);
        let mut out = String::new();
        let _ = write!(out, "{:>width$}", "");
        for j in 0..self.dim {
            let _ = write!(out, " {:>width$}", label(j));
        }
        out.push('\n');
        for (i, row) in cells.iter().enumerate() {
            let _ = write!(out, "{:>width$}", label(i));
            for c in row {
                let _ = write!(out, " {c:>width$}");
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Debug for Dbm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (1..self.dim).map(|i| format!("x{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        write!(f, "Dbm(canonical={})\n{}", self.canonical, self.dump(&refs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn le(v: i64) -> Bound {
        Bound::le(Time::from_units(v))
    }

    fn lt(v: i64) -> Bound {
        Bound::lt(Time::from_units(v))
    }

    fn iv(lo: i64, hi: i64) -> TimeInterval {
        TimeInterval { lo: Time::from_units(lo), hi: Time::from_units(hi) }
    }

    #[test]
    fn bound_order_and_sum() {
        assert!(lt(3) < le(3) && le(3) < lt(4) && le(1_000) < Bound::INF);
        assert_eq!(le(2).add(lt(3)), lt(5));
        assert_eq!(le(2).add(le(-3)), le(-1));
        assert_eq!(le(2).add(Bound::INF), Bound::INF);
        assert_eq!(le(-4).value(), Some(Time::from_units(-4)));
        assert!(lt(0).is_strict() && !Bound::INF.is_strict());
    }

    #[test]
    fn zero_zone() {
        let z = Dbm::zero(2);
        assert_eq!(z.is_empty(), Ok(false));
        assert_eq!(z.clock_bounds(1).unwrap(), iv(0, 0));
        assert_eq!(z.canonical(), z);
        let mut r = z.clone();
        r.reset(2).unwrap();
        assert_eq!(r, z);
    }

    #[test]
    fn up_of_zero_flows_on_the_diagonal() {
        let mut z = Dbm::zero(2);
        z.up().unwrap();
        for i in 1..=2 {
            assert_eq!(z.get(i, 0), Bound::INF);
            for j in 1..=2 {
                assert_eq!(z.get(i, j), Bound::LE_ZERO);
            }
        }
        let again = {
            let mut a = z.clone();
            a.up().unwrap();
            a
        };
        assert_eq!(again, z);
        assert!(z.constrain(1, 0, le(7)).unwrap());
        assert_eq!(z.clock_bounds(1).unwrap(), iv(0, 7));
    }

    #[test]
    fn tightening_goes_through_the_reference_clock() {
        // x <= 5, y >= 3, x - y <= 10 should become x - y <= 2.
        let mut d = Dbm::unconstrained(2);
        d.set(1, 0, le(5));
        d.set(0, 2, le(-3));
        d.set(1, 2, le(10));
        d.canonicalize();
        assert_eq!(d.get(1, 2), le(2));
        assert_eq!(d.is_empty(), Ok(false));
    }

    #[test]
    fn negative_cycle_is_empty() {
        let mut d = Dbm::unconstrained(1);
        d.set(1, 0, le(1));
        d.set(0, 1, le(-2));
        assert_eq!(d.is_empty(), Err(ZoneError::Precondition("zone is not canonical")));
        d.canonicalize();
        assert_eq!(d.is_empty(), Ok(true));
        let mut z = Dbm::zero(1);
        assert_eq!(z.constrain(0, 1, le(-1)), Ok(false));
        assert_eq!(z.is_empty(), Ok(true));
        assert!(z.clock_bounds(1).is_err());
    }

    #[test]
    fn reset_after_interval() {
        let mut d = Dbm::unconstrained(1);
        d.constrain_interval(1, iv(3, 5)).unwrap();
        d.reset(1).unwrap();
        assert_eq!(d.clock_bounds(1).unwrap(), iv(0, 0));
        assert!(d.reset(2).is_err());
    }

    #[test]
    fn includes_examples() {
        let mut wide = Dbm::unconstrained(1);
        wide.constrain_interval(1, iv(0, 5)).unwrap();
        let mut narrow = Dbm::unconstrained(1);
        narrow.constrain_interval(1, iv(1, 2)).unwrap();
        assert_eq!(wide.includes(&wide), Ok(true));
        assert_eq!(wide.includes(&narrow), Ok(true));
        assert_eq!(narrow.includes(&wide), Ok(false));
        assert!(wide.includes(&Dbm::zero(2)).is_err());
    }

    #[test]
    fn insert_and_remove_clock() {
        let mut d = Dbm::zero(1);
        d.up().unwrap();
        d.constrain(1, 0, le(4)).unwrap();
        d.insert_zero_clock(1);
        // new clock 1 is zero, old clock now at 2 with range [0,4]
        assert_eq!(d.clock_bounds(1).unwrap(), iv(0, 0));
        assert_eq!(d.clock_bounds(2).unwrap(), iv(0, 4));
        assert_eq!(d.canonical(), d);
        d.remove_clock(1);
        assert_eq!(d.clock_bounds(1).unwrap(), iv(0, 4));
    }

    #[test]
    fn dump_names_rows() {
        let text = Dbm::zero(1).dump(&["T"]);
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().next().unwrap().trim_end().ends_with('T'));
    }

    /// Integer points of a zone with every clock in `0..=10`.
    pub(crate) fn points(d: &Dbm) -> Vec<Vec<i64>> {
        let n = d.clocks();
        let mut out = Vec::new();
        let mut p = vec![0i64; n];
        loop {
            let val = |i: usize| if i == 0 { 0 } else { p[i - 1] };
            let ok = (0..=n).all(|i| {
                (0..=n).all(|j| match d.get(i, j).value() {
                    None => true,
                    Some(v) => {
                        let diff = Time::from_units(val(i) - val(j));
                        if d.get(i, j).is_strict() {
                            diff < v
                        } else {
                            diff <= v
                        }
                    }
                })
            });
            if ok {
                out.push(p.clone());
            }
            let mut k = 0;
            while k < n && p[k] == 10 {
                p[k] = 0;
                k += 1;
            }
            if k == n {
                return out;
            }
            p[k] += 1;
        }
    }

    pub(crate) fn random_dbm() -> impl Strategy<Value = Dbm> {
        (1usize..=4).prop_flat_map(random_dbm_n)
    }

    pub(crate) fn random_dbm_n(n: usize) -> impl Strategy<Value = Dbm> {
        let dim = n + 1;
        proptest::collection::vec(proptest::option::weighted(0.6, -10i64..=10), dim * dim).prop_map(move |cells| {
            let mut d = Dbm::unconstrained(n);
            for i in 0..dim {
                for j in 0..dim {
                    if i == j {
                        continue;
                    }
                    let b = match (i, j, cells[i * dim + j]) {
                        (_, 0, v) => le(v.map_or(10, |v| v.abs())),
                        (0, _, v) => le(v.map_or(0, |v| -v.abs())),
                        (_, _, Some(v)) => le(v),
                        (_, _, None) => Bound::INF,
                    };
                    d.set(i, j, b);
                }
            }
            d
        })
    }

    proptest! {
        #[test]
        fn canonical_is_idempotent_and_preserves_points(d in random_dbm()) {
            let c = d.canonical();
            prop_assert_eq!(c.canonical(), c.clone());
            prop_assert_eq!(points(&c), points(&d));
            prop_assert_eq!(c.is_empty().unwrap(), points(&d).is_empty());
            if !c.is_empty().unwrap() {
                for i in 0..=c.clocks() {
                    for j in 0..=c.clocks() {
                        prop_assert!(c.get(i, j).add(c.get(j, i)) >= Bound::LE_ZERO);
                    }
                }
            }
        }

        #[test]
        fn clock_bounds_are_attained(d in random_dbm()) {
            let c = d.canonical();
            let pts = points(&c);
            prop_assume!(!pts.is_empty());
            for k in 1..=c.clocks() {
                let b = c.clock_bounds(k).unwrap();
                let lo = pts.iter().map(|p| p[k - 1]).min().unwrap();
                let hi = pts.iter().map(|p| p[k - 1]).max().unwrap();
                prop_assert_eq!(b, iv(lo, hi));
            }
        }

        #[test]
        fn constrain_matches_filtering(d in random_dbm(), i in 0usize..5, j in 0usize..5, v in -10i64..=10) {
            let mut c = d.canonical();
            prop_assume!(i <= c.clocks() && j <= c.clocks() && i != j);
            let before = points(&c);
            let non_empty = c.constrain(i, j, le(v)).unwrap();
            let val = |p: &Vec<i64>, k: usize| if k == 0 { 0 } else { p[k - 1] };
            let expected: Vec<Vec<i64>> = before.into_iter().filter(|p| val(p, i) - val(p, j) <= v).collect();
            prop_assert_eq!(non_empty, !expected.is_empty());
            prop_assert_eq!(c.is_empty().unwrap(), expected.is_empty());
            if non_empty {
                prop_assert_eq!(c.canonical(), c.clone());
                prop_assert_eq!(points(&c), expected);
            }
        }

        #[test]
        fn reset_matches_projection((d, k) in (1usize..=4).prop_flat_map(|n| (random_dbm_n(n), 1..=n))) {
            let mut c = d.canonical();
            if c.is_empty().unwrap() {
                return Ok(());
            }
            let mut expected: Vec<Vec<i64>> = points(&c).into_iter().map(|mut p| { p[k - 1] = 0; p }).collect();
            expected.sort();
            expected.dedup();
            c.reset(k).unwrap();
            prop_assert_eq!(c.canonical(), c.clone());
            let mut got = points(&c);
            got.sort();
            prop_assert_eq!(got, expected);
        }

        #[test]
        fn permute_renames_points((d, order) in (1usize..=4).prop_flat_map(|n| (random_dbm_n(n), Just((1..=n).collect::<Vec<_>>()).prop_shuffle()))) {
            let c = d.canonical();
            let p = c.permute(&order);
            prop_assert_eq!(p.canonical(), p.clone());
            let mut expected: Vec<Vec<i64>> =
                points(&c).into_iter().map(|x| order.iter().map(|&o| x[o - 1]).collect()).collect();
            expected.sort();
            let mut got = points(&p);
            got.sort();
            prop_assert_eq!(got, expected);
        }

        #[test]
        fn up_matches_flow(d in random_dbm()) {
            let mut c = d.canonical();
            prop_assume!(!c.is_empty().unwrap());
            let before = points(&c);
            c.up().unwrap();
            prop_assert_eq!(c.canonical(), c.clone());
            let after = points(&c);
            for p in &after {
                let reachable = (0..=10).any(|delta| {
                    let q: Vec<i64> = p.iter().map(|x| x - delta).collect();
                    before.contains(&q)
                });
                prop_assert!(reachable, "{:?} not reachable by delay", p);
            }
            for p in &before {
                prop_assert!(after.contains(p));
            }
        }

        #[test]
        fn includes_matches_point_containment((a, b) in (1usize..=4).prop_flat_map(|n| (random_dbm_n(n), random_dbm_n(n)))) {
            let a = a.canonical();
            let b = b.canonical();
            let pa = points(&a);
            let contained = points(&b).iter().all(|p| pa.contains(p));
            prop_assert_eq!(a.includes(&b).unwrap(), contained);
        }
    }
}

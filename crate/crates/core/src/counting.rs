//! Exact counters for diagonal equations: solutions in a box, even moments
//! of Weyl sums, Vinogradov systems and the weighted tail sum.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{CheckedAdd, One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{big_count, integer_root};
use crate::error::{Error, Result};
use crate::guards::Guards;
use crate::model::{truncate_box, BoxSpec};
use crate::numeric::DoubleDouble;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    BruteForce,
    Convolution,
    MeetInMiddle,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::BruteForce, Method::Convolution, Method::MeetInMiddle];
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountResult {
    #[serde(with = "big_count")]
    pub count: BigUint,
    pub method: Method,
    pub work: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSum {
    pub m: u128,
    pub s: u32,
    pub k: u32,
    pub value: f64,
    /// Number of solutions contributing.
    pub solutions: u64,
}

/// `[1, 2^k, …, P^k]`.
fn power_list(p: u64, k: u32) -> Vec<u128> {
    (1..=p as u128).map(|x| x.pow(k)).collect()
}

/// Visits every partial sum `Σ lists[i][j_i] ≤ limit` in lexicographic
/// order of the index tuple; lists must be ascending. Returns the node count.
fn walk<F>(lists: &[Vec<u128>], limit: u128, visit: &mut F) -> u64
where
    F: FnMut(u128, &[usize]),
{
    fn rec<F: FnMut(u128, &[usize])>(
        lists: &[Vec<u128>],
        limit: u128,
        sum: u128,
        idx: &mut Vec<usize>,
        visit: &mut F,
        work: &mut u64,
    ) {
        *work += 1;
        let depth = idx.len();
        if depth == lists.len() {
            visit(sum, idx);
            return;
        }
        for (j, &p) in lists[depth].iter().enumerate() {
            if p > limit - sum {
                break;
            }
            idx.push(j);
            rec(lists, limit, sum + p, idx, visit, work);
            idx.pop();
        }
    }
    let mut work = 0;
    rec(lists, limit, 0, &mut Vec::with_capacity(lists.len()), visit, &mut work);
    work
}

fn tuple_volume(sides: &[u64]) -> u128 {
    sides
        .iter()
        .try_fold(1u128, |acc, &p| acc.checked_mul(p as u128))
        .unwrap_or(u128::MAX)
}

fn big_from_u128_sum(parts: impl Iterator<Item = u128>) -> BigUint {
    let mut acc = 0u128;
    let mut big = BigUint::zero();
    for p in parts {
        match acc.checked_add(p) {
            Some(v) => acc = v,
            None => {
                big += BigUint::from(acc);
                acc = p;
            }
        }
    }
    big + BigUint::from(acc)
}

/// Nested enumeration of the first `s − 1` variables with pruning; the last
/// variable is found by binary search among the `k`-th powers.
pub fn root_count_bruteforce(b: &BoxSpec) -> Result<CountResult> {
    let g = Guards::current()?;
    let b = truncate_box(b);
    Guards::check("brute-force tuples", tuple_volume(b.sides()), g.tuples)?;
    let k = b.k();
    let n = b.n();
    let (last, head) = b.sides().split_last().expect("nonempty");
    let lists: Vec<Vec<u128>> = head.iter().map(|&p| power_list(p, k)).collect();
    let last = power_list(*last, k);
    let mut count = 0u128;
    let work = walk(&lists, n, &mut |sum, _| {
        if last.binary_search(&(n - sum)).is_ok() {
            count += 1;
        }
    });
    Ok(CountResult {
        count: BigUint::from(count),
        method: Method::BruteForce,
        work,
    })
}

/// Calls `f` on every solution `(x_1, …, x_s)` in the box, in lexicographic
/// order of the sorted sides.
pub fn for_each_box_solution<F: FnMut(&[u64])>(b: &BoxSpec, mut f: F) -> Result<()> {
    let g = Guards::current()?;
    let b = truncate_box(b);
    Guards::check("solution enumeration tuples", tuple_volume(b.sides()), g.tuples)?;
    let k = b.k();
    let n = b.n();
    let (last, head) = b.sides().split_last().expect("nonempty");
    let lists: Vec<Vec<u128>> = head.iter().map(|&p| power_list(p, k)).collect();
    let last = power_list(*last, k);
    let mut tuple = vec![0u64; b.s()];
    walk(&lists, n, &mut |sum, idx| {
        if let Ok(j) = last.binary_search(&(n - sum)) {
            for (t, &i) in tuple.iter_mut().zip(idx) {
                *t = i as u64 + 1;
            }
            tuple[idx.len()] = j as u64 + 1;
            f(&tuple);
        }
    });
    Ok(())
}

/// Coefficient of `z^N` in `∏_j Σ_{x≤P_j} z^{x^k}`, by successive sparse
/// convolutions truncated at degree `N`. `None` on overflow of `T`.
fn convolve_count<T>(lists: &[Vec<u128>], n: usize, work: &mut u64) -> Option<T>
where
    T: Clone + Zero + One + CheckedAdd,
{
    let (last, head) = lists.split_last().expect("nonempty");
    let mut cur = vec![T::zero(); n + 1];
    cur[0] = T::one();
    let mut reach = 0usize;
    for list in head {
        let mut next = vec![T::zero(); n + 1];
        for v in 0..=reach {
            if cur[v].is_zero() {
                continue;
            }
            for &p in list {
                let w = v + p as usize;
                if w > n {
                    break;
                }
                next[w] = next[w].checked_add(&cur[v])?;
                *work += 1;
            }
        }
        reach = (reach + list.last().map_or(0, |&p| p as usize)).min(n);
        cur = next;
    }
    let mut total = T::zero();
    for &p in last {
        if p as usize > n {
            break;
        }
        total = total.checked_add(&cur[n - p as usize])?;
        *work += 1;
    }
    Some(total)
}

pub fn root_count_convolution(b: &BoxSpec) -> Result<CountResult> {
    let g = Guards::current()?;
    let b = truncate_box(b);
    Guards::check("convolution length", b.n() + 1, g.conv_len)?;
    let n = b.n() as usize;
    let lists: Vec<Vec<u128>> = b.sides().iter().map(|&p| power_list(p, b.k())).collect();
    let mut work = 0;
    let count = match convolve_count::<u128>(&lists, n, &mut work) {
        Some(c) => BigUint::from(c),
        None => {
            work = 0;
            convolve_count::<BigUint>(&lists, n, &mut work).expect("big integers do not overflow")
        }
    };
    Ok(CountResult {
        count,
        method: Method::Convolution,
        work,
    })
}

/// Partial sums of the first `⌈s/2⌉` variables as a sorted multiset, joined
/// against the sums of the remaining variables.
pub fn root_count_mitm(b: &BoxSpec) -> Result<CountResult> {
    let g = Guards::current()?;
    let b = truncate_box(b);
    let h = b.s().div_ceil(2);
    let (left, right) = b.sides().split_at(h);
    Guards::check("meet-in-the-middle half", tuple_volume(left), g.tuples)?;
    Guards::check("meet-in-the-middle half", tuple_volume(right), g.tuples)?;
    let k = b.k();
    let n = b.n();
    let left: Vec<Vec<u128>> = left.iter().map(|&p| power_list(p, k)).collect();
    let right: Vec<Vec<u128>> = right.iter().map(|&p| power_list(p, k)).collect();

    let mut sums = Vec::new();
    let mut work = walk(&left, n, &mut |s, _| sums.push(s));
    sums.sort_unstable();
    let mut multiset: Vec<(u128, u128)> = Vec::new();
    for s in sums {
        match multiset.last_mut() {
            Some((v, c)) if *v == s => *c += 1,
            _ => multiset.push((s, 1)),
        }
    }
    work += multiset.len() as u64;

    let mut hits = Vec::new();
    work += walk(&right, n, &mut |r, _| {
        if let Ok(i) = multiset.binary_search_by_key(&(n - r), |e| e.0) {
            hits.push(multiset[i].1);
        }
    });
    Ok(CountResult {
        count: big_from_u128_sum(hits.into_iter()),
        method: Method::MeetInMiddle,
        work,
    })
}

pub fn root_count_with(b: &BoxSpec, method: Method) -> Result<CountResult> {
    match method {
        Method::BruteForce => root_count_bruteforce(b),
        Method::Convolution => root_count_convolution(b),
        Method::MeetInMiddle => root_count_mitm(b),
    }
}

/// Convolution when the coefficient array fits the guard, otherwise
/// meet-in-the-middle.
pub fn root_count(b: &BoxSpec) -> Result<CountResult> {
    let g = Guards::current()?;
    if b.n() < g.conv_len {
        root_count_convolution(b)
    } else {
        root_count_mitm(b)
    }
}

/// `r_m(v)` for `0 ≤ v ≤ m X^k`: ordered representations as a sum of `m`
/// `k`-th powers of integers in `[1, X]`.
pub fn representation_counts(k: u32, x: u64, m: u32) -> Result<Vec<u128>> {
    if k < 2 || x < 1 || m < 1 {
        return Err(Error::invalid("need k >= 2, X >= 1, m >= 1"));
    }
    let g = Guards::current()?;
    let xk = (x as u128)
        .checked_pow(k)
        .ok_or(Error::Overflow("X^k"))?;
    let len = xk
        .checked_mul(m as u128)
        .and_then(|v| v.checked_add(1))
        .ok_or(Error::Overflow("m X^k"))?;
    Guards::check("moment convolution length", len, g.conv_len)?;
    let powers = power_list(x, k);
    let mut cur = vec![0u128; len as usize];
    cur[0] = 1;
    let mut reach = 0usize;
    for _ in 0..m {
        let mut next = vec![0u128; len as usize];
        for v in 0..=reach {
            if cur[v] == 0 {
                continue;
            }
            for &p in &powers {
                let w = v + p as usize;
                next[w] = next[w].checked_add(cur[v]).ok_or(Error::Overflow("r_m"))?;
            }
        }
        reach += xk as usize;
        cur = next;
    }
    Ok(cur)
}

/// Solutions of `x_1^k + … + x_m^k = y_1^k + … + y_m^k` in `[1, X]`, as `Σ_v r_m(v)²`.
pub fn hua_moment_count(k: u32, x: u64, m: u32) -> Result<BigUint> {
    let r = representation_counts(k, x, m)?;
    let mut total = BigUint::zero();
    let mut acc = 0u128;
    for c in r {
        let sq = BigUint::from(c);
        match c.checked_mul(c).and_then(|sq| acc.checked_add(sq)) {
            Some(v) => acc = v,
            None => total += &sq * &sq,
        }
    }
    Ok(total + BigUint::from(acc))
}

/// Solutions of `Σ x_i^j = Σ y_i^j` for `1 ≤ j ≤ k`, `2s` variables in `[1, X]`,
/// by grouping the `X^s` tuples on their power-sum vector.
pub fn vinogradov_count(k: u32, s: u32, x: u64) -> Result<BigUint> {
    if k < 1 || s < 1 || x < 1 {
        return Err(Error::invalid("need k >= 1, s >= 1, X >= 1"));
    }
    let g = Guards::current()?;
    let tuples = (x as u128).checked_pow(s).unwrap_or(u128::MAX);
    Guards::check("Vinogradov tuples", tuples, g.tuples)?;
    let rows: Vec<Vec<u128>> = (1..=x as u128)
        .map(|v| {
            (1..=k)
                .map(|j| v.checked_pow(j).ok_or(Error::Overflow("x^j")))
                .collect::<Result<Vec<u128>>>()
        })
        .collect::<Result<_>>()?;
    let mut classes: HashMap<Vec<u128>, u128> = HashMap::new();
    let mut idx = vec![0usize; s as usize];
    let mut vec = vec![0u128; k as usize];
    loop {
        vec.iter_mut().for_each(|c| *c = 0);
        for &i in &idx {
            for (c, p) in vec.iter_mut().zip(&rows[i]) {
                *c = c.checked_add(*p).ok_or(Error::Overflow("power sum"))?;
            }
        }
        *classes.entry(vec.clone()).or_insert(0) += 1;
        // odometer
        let mut d = 0;
        loop {
            if d == idx.len() {
                let mut counts: Vec<u128> = classes.into_values().collect();
                counts.sort_unstable();
                let mut total = BigUint::zero();
                for c in counts {
                    let c = BigUint::from(c);
                    total += &c * &c;
                }
                return Ok(total);
            }
            idx[d] += 1;
            if idx[d] < rows.len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

fn weight_exponent(k: u32, s: u32) -> f64 {
    -1.0 + k as f64 / s as f64
}

/// Visits each solution of `x_1^k + … + x_s^k = m` in lexicographic order.
fn for_each_solution<F: FnMut(&[u64])>(k: u32, s: u32, m: u128, f: &mut F) -> Result<()> {
    let g = Guards::current()?;
    let root = integer_root(m, k) as u64;
    let volume = (root as u128).checked_pow(s - 1).unwrap_or(u128::MAX);
    Guards::check("weighted-tail tuples", volume, g.tuples)?;
    let powers = power_list(root, k);
    let lists = vec![powers.clone(); s as usize - 1];
    let mut tuple = vec![0u64; s as usize];
    walk(&lists, m, &mut |sum, idx| {
        if let Ok(j) = powers.binary_search(&(m - sum)) {
            for (t, &i) in tuple.iter_mut().zip(idx) {
                *t = i as u64 + 1;
            }
            tuple[s as usize - 1] = j as u64 + 1;
            f(&tuple);
        }
    });
    Ok(())
}

/// `(x_1⋯x_s)^{−1+k/s}` with one rounding per factor.
fn tuple_weight(t: &[u64], e: f64) -> f64 {
    t.iter().map(|&x| (x as f64).powf(e)).product()
}

/// `Σ_{x_1^k+⋯+x_s^k=m} (x_1⋯x_s)^{−1+k/s}`, accumulated in double-double
/// arithmetic in lexicographic order of the solutions.
pub fn weighted_tail_sum(k: u32, s: u32, m: u128) -> Result<WeightedSum> {
    if k < 2 || s < 2 || m < 1 {
        return Err(Error::invalid("need k >= 2, s >= 2, m >= 1"));
    }
    let e = weight_exponent(k, s);
    let mut acc = DoubleDouble::new();
    let mut solutions = 0u64;
    for_each_solution(k, s, m, &mut |t| {
        acc.add(tuple_weight(t, e));
        solutions += 1;
    })?;
    Ok(WeightedSum {
        m,
        s,
        k,
        value: acc.value(),
        solutions,
    })
}

/// `W(m)` for every `0 ≤ m ≤ M` at once, by convolving the weight sequence
/// `x ↦ x^{−1+k/s}` on the `k`-th powers `s` times.
pub fn weighted_tail_profile(k: u32, s: u32, big_m: usize) -> Result<Vec<f64>> {
    if k < 2 || s < 2 {
        return Err(Error::invalid("need k >= 2, s >= 2"));
    }
    let g = Guards::current()?;
    Guards::check("weighted-tail profile length", big_m as u128 + 1, g.conv_len)?;
    let e = weight_exponent(k, s);
    let root = integer_root(big_m as u128, k) as u64;
    let terms: Vec<(usize, f64)> = (1..=root)
        .map(|x| ((x as u128).pow(k) as usize, (x as f64).powf(e)))
        .collect();
    let mut cur = vec![0.0f64; big_m + 1];
    cur[0] = 1.0;
    for _ in 0..s {
        let mut next = vec![0.0f64; big_m + 1];
        for v in 0..=big_m {
            if cur[v] == 0.0 {
                continue;
            }
            for &(p, w) in &terms {
                if v + p > big_m {
                    break;
                }
                next[v + p] += cur[v] * w;
            }
        }
        cur = next;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bx(k: u32, sides: &[u64], n: u128) -> BoxSpec {
        BoxSpec::new(k, sides.to_vec(), n).unwrap()
    }

    fn all_methods(b: &BoxSpec) -> Vec<BigUint> {
        Method::ALL
            .iter()
            .map(|&m| root_count_with(b, m).unwrap().count)
            .collect()
    }

    // Independent oracle: odometer over the full box, no pruning.
    fn naive_count(b: &BoxSpec) -> u64 {
        let k = b.k();
        let mut idx = vec![1u64; b.s()];
        let mut count = 0;
        loop {
            let sum: u128 = idx.iter().map(|&x| (x as u128).pow(k)).sum();
            if sum == b.n() {
                count += 1;
            }
            let mut d = 0;
            loop {
                if d == idx.len() {
                    return count;
                }
                idx[d] += 1;
                if idx[d] <= b.sides()[d] {
                    break;
                }
                idx[d] = 1;
                d += 1;
            }
        }
    }

    #[test]
    fn worked_examples() {
        for (k, sides, n, want) in [
            (2, vec![5, 5], 25u128, 2u64),
            (3, vec![12, 12], 1729, 4),
            (2, vec![10, 10, 10, 10, 10], 5, 1),
            (2, vec![1, 1, 1, 1], 4, 1),
            (5, vec![3, 1, 7], 3, 1),
        ] {
            let b = bx(k, &sides, n);
            for c in all_methods(&b) {
                assert_eq!(c, BigUint::from(want), "{b:?}");
            }
        }
    }

    #[test]
    fn box_solutions_listed() {
        let mut sols = Vec::new();
        for_each_box_solution(&bx(3, &[12, 12], 1729), |t| sols.push(t.to_vec())).unwrap();
        assert_eq!(sols, vec![vec![1, 12], vec![9, 10], vec![10, 9], vec![12, 1]]);
    }

    #[test]
    fn single_variable() {
        for n in 1..=200u128 {
            let b = bx(3, &[4], n);
            let want = u64::from(matches!(n, 1 | 8 | 27 | 64));
            for c in all_methods(&b) {
                assert_eq!(c, BigUint::from(want), "N={n}");
            }
        }
    }

    #[test]
    fn count_json_shape() {
        let r = root_count_bruteforce(&bx(2, &[5, 5], 25)).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["count"], 2);
        assert_eq!(v["method"], "BruteForce");
        let big = CountResult {
            count: BigUint::from(u128::MAX) * 10u32,
            method: Method::Convolution,
            work: 0,
        };
        let text = serde_json::to_string(&big).unwrap();
        assert!(text.contains("\"3402823669209384634633746074317682114550\""));
        let back: CountResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back, big);
    }

    #[test]
    fn u128_counts_round_trip() {
        let r = CountResult {
            count: BigUint::from(u128::MAX),
            method: Method::MeetInMiddle,
            work: 1,
        };
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains(&format!("\"{}\"", u128::MAX)));
        let back: CountResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        let r = CountResult { count: BigUint::from(u64::MAX), ..r };
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains(&format!(":{},", u64::MAX)));
        assert_eq!(serde_json::from_str::<CountResult>(&text).unwrap(), r);
    }

    #[test]
    fn convolution_falls_back_to_big_integers() {
        let lists = vec![vec![0u128, 0, 0]; 90];
        let mut work = 0;
        assert!(convolve_count::<u128>(&lists, 0, &mut work).is_none());
        let big = convolve_count::<BigUint>(&lists, 0, &mut work).unwrap();
        assert_eq!(big, BigUint::from(3u32).pow(90));
    }

    #[test]
    fn guard_refuses_large_enumeration() {
        let b = bx(2, &[100_000, 100_000], 10_000_000_000);
        assert!(matches!(root_count_bruteforce(&b), Err(Error::Guard { .. })));
        assert!(matches!(root_count_convolution(&b), Err(Error::Guard { .. })));
    }

    #[test]
    fn hua_examples() {
        assert_eq!(hua_moment_count(2, 2, 1).unwrap(), BigUint::from(2u32));
        assert_eq!(hua_moment_count(2, 3, 2).unwrap(), BigUint::from(15u32));
        for k in 2..=4 {
            for x in 1..=12u64 {
                assert_eq!(hua_moment_count(k, x, 1).unwrap(), BigUint::from(x));
            }
        }
    }

    #[test]
    fn hua_matches_exhaustive_quadruples() {
        for (k, x) in [(2u32, 6u64), (3, 5)] {
            let mut n = 0u64;
            for a in 1..=x {
                for b in 1..=x {
                    for c in 1..=x {
                        for d in 1..=x {
                            if a.pow(k) + b.pow(k) == c.pow(k) + d.pow(k) {
                                n += 1;
                            }
                        }
                    }
                }
            }
            assert_eq!(hua_moment_count(k, x, 2).unwrap(), BigUint::from(n));
        }
    }

    #[test]
    fn vinogradov_examples() {
        assert_eq!(vinogradov_count(2, 1, 2).unwrap(), BigUint::from(2u32));
        for k in 1..=4 {
            for s in 1..=3 {
                assert_eq!(vinogradov_count(k, s, 1).unwrap(), BigUint::one());
            }
        }
    }

    #[test]
    fn vinogradov_frozen_value() {
        let mut oracle = 0u32;
        for a in 1..=5u64 {
            for b in 1..=5 {
                for c in 1..=5 {
                    for d in 1..=5 {
                        if a + b == c + d && a * a + b * b == c * c + d * d {
                            oracle += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(oracle, 45);
        assert_eq!(vinogradov_count(2, 2, 5).unwrap(), BigUint::from(45u32));
    }

    #[test]
    fn weighted_tail_examples() {
        let w = weighted_tail_sum(2, 4, 4).unwrap();
        assert_eq!((w.value, w.solutions), (1.0, 1));
        let w = weighted_tail_sum(2, 4, 7).unwrap();
        assert!((w.value - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(w.solutions, 4);
        let w = weighted_tail_sum(2, 4, 3).unwrap();
        assert_eq!((w.value, w.solutions), (0.0, 0));
    }

    #[test]
    fn weighted_tail_dyadic_partition() {
        // Group the solutions by dyadic cell (⌊log2 x_i⌋)_i and re-add cell by cell.
        for (k, s, m) in [(2u32, 4u32, 2025u128), (3, 5, 1800), (2, 3, 9000)] {
            let e = weight_exponent(k, s);
            let mut cells: std::collections::BTreeMap<Vec<u32>, DoubleDouble> = Default::default();
            for_each_solution(k, s, m, &mut |t| {
                let key: Vec<u32> = t.iter().map(|x| x.ilog2()).collect();
                cells.entry(key).or_default().add(tuple_weight(t, e));
            })
            .unwrap();
            let mut total = DoubleDouble::new();
            for c in cells.values() {
                let (hi, lo) = c.parts();
                total.add(hi);
                total.add(lo);
            }
            let direct = weighted_tail_sum(k, s, m).unwrap().value;
            assert!((total.value() - direct).abs() <= 1e-14 * direct, "{k} {s} {m}");
        }
    }

    #[test]
    fn profile_matches_lexicographic_sum() {
        let prof = weighted_tail_profile(2, 4, 5000).unwrap();
        for m in [1usize, 3, 4, 7, 100, 1234, 4999, 5000] {
            let w = weighted_tail_sum(2, 4, m as u128).unwrap().value;
            assert!((prof[m] - w).abs() <= 1e-12 * w.max(1.0), "m={m}: {} vs {w}", prof[m]);
        }
    }

    #[test]
    fn method_agreement_grid() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for k in 2..=3u32 {
            let max_side: u64 = if k == 2 { 14 } else { 7 };
            for s in 2..=6usize {
                for _ in 0..100 {
                    let sides: Vec<u64> = (0..s).map(|_| rng.gen_range(1..=max_side)).collect();
                    let n = rng.gen_range(1..=s as u128 * (max_side as u128).pow(k));
                    let b = BoxSpec::new(k, sides, n).unwrap();
                    let c = all_methods(&b);
                    assert!(c[0] == c[1] && c[1] == c[2], "{b:?}: {c:?}");
                }
            }
        }
    }

    fn small_box(k: u32, s: usize) -> impl Strategy<Value = BoxSpec> {
        let max_side: u64 = if k == 2 { 14 } else { 7 };
        (prop::collection::vec(1..=max_side, s), 1u128..=(s as u128 * (max_side as u128).pow(k)))
            .prop_map(move |(sides, n)| BoxSpec::new(k, sides, n).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn methods_agree_with_naive(b in (2u32..=3).prop_flat_map(|k| (2usize..=4).prop_flat_map(move |s| small_box(k, s)))) {
            let want = BigUint::from(naive_count(&b));
            for c in all_methods(&b) {
                prop_assert_eq!(&c, &want);
            }
        }

        #[test]
        fn mitm_matches_convolution_up_to_eight(b in (2u32..=3).prop_flat_map(|k| (2usize..=8).prop_flat_map(move |s| small_box(k, s)))) {
            prop_assert_eq!(root_count_mitm(&b).unwrap().count, root_count_convolution(&b).unwrap().count);
        }

        #[test]
        fn monotone_and_permutation_invariant(
            b in small_box(2, 4),
            j in 0usize..4,
            grow in 1u64..5,
            perm in Just(vec![3usize, 0, 2, 1]).prop_shuffle(),
        ) {
            let base = root_count(&b).unwrap().count;
            let mut sides = b.sides().to_vec();
            sides[j] += grow;
            let bigger = BoxSpec::new(2, sides, b.n()).unwrap();
            prop_assert!(root_count(&bigger).unwrap().count >= base.clone());
            let shuffled: Vec<u64> = perm.iter().map(|&i| b.sides()[i]).collect();
            let p = BoxSpec::new(2, shuffled, b.n()).unwrap();
            prop_assert_eq!(root_count_bruteforce(&p).unwrap().count, base.clone());
            prop_assert_eq!(root_count(&truncate_box(&b)).unwrap().count, base);
        }

        #[test]
        fn hua_at_least_diagonal(k in 2u32..=3, x in 1u64..=9, m in 1u32..=3) {
            prop_assert!(hua_moment_count(k, x, m).unwrap() >= BigUint::from(x).pow(m));
        }
    }
}

//! Independent reference implementations used to check the library.
//!
//! Everything here is deliberately naive: linear scans instead of hash maps,
//! full recounts instead of incremental updates, exhaustive enumeration
//! instead of dynamic programming. None of it calls into the code under test
//! except for plain data types.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use unicode_general_category::{get_general_category, GeneralCategory};

// ---------------------------------------------------------------- metrics

fn is_punct(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
    )
}

pub fn naive_tokens(text: &str) -> Vec<String> {
    let mut spaced = String::new();
    for c in text.chars() {
        if is_punct(c) {
            spaced.push(' ');
            spaced.push(c);
            spaced.push(' ');
        } else {
            spaced.push(c);
        }
    }
    spaced.split_whitespace().map(str::to_string).collect()
}

fn ngrams<T: Clone>(items: &[T], n: usize) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i + n <= items.len() {
        out.push(items[i..i + n].to_vec());
        i += 1;
    }
    out
}

fn count_in<T: PartialEq>(list: &[Vec<T>], g: &[T]) -> usize {
    list.iter().filter(|x| x.as_slice() == g).count()
}

/// (clipped matches, hypothesis n-grams, reference n-grams)
fn clipped<T: PartialEq + Clone>(hyp: &[T], r: &[T], n: usize) -> (usize, usize, usize) {
    let h = ngrams(hyp, n);
    let rr = ngrams(r, n);
    let mut distinct: Vec<Vec<T>> = Vec::new();
    for g in &h {
        if !distinct.contains(g) {
            distinct.push(g.clone());
        }
    }
    let matched = distinct
        .iter()
        .map(|g| count_in(&h, g).min(count_in(&rr, g)))
        .sum();
    (matched, h.len(), rr.len())
}

pub fn naive_bleu(pairs: &[(String, String)]) -> f64 {
    let mut m = [0usize; 4];
    let mut t = [0usize; 4];
    let mut c = 0usize;
    let mut r = 0usize;
    for (hyp, reference) in pairs {
        let h = naive_tokens(hyp);
        let rf = naive_tokens(reference);
        c += h.len();
        r += rf.len();
        for n in 1..=4 {
            let (mm, hh, _) = clipped(&h, &rf, n);
            m[n - 1] += mm;
            t[n - 1] += hh;
        }
    }
    if c == 0 {
        return 0.0;
    }
    let mut product = 1.0f64;
    for n in 0..4 {
        if m[n] == 0 || t[n] == 0 {
            return 0.0;
        }
        product *= m[n] as f64 / t[n] as f64;
    }
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    100.0 * bp * product.powf(0.25)
}

pub fn naive_chrfpp(pairs: &[(String, String)]) -> f64 {
    let mut stats = vec![(0usize, 0usize, 0usize); 8];
    for (hyp, reference) in pairs {
        let hc: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
        let rc: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
        for n in 1..=6 {
            let (a, b, c) = clipped(&hc, &rc, n);
            stats[n - 1].0 += a;
            stats[n - 1].1 += b;
            stats[n - 1].2 += c;
        }
        let hw = naive_tokens(hyp);
        let rw = naive_tokens(reference);
        for n in 1..=2 {
            let (a, b, c) = clipped(&hw, &rw, n);
            stats[5 + n].0 += a;
            stats[5 + n].1 += b;
            stats[5 + n].2 += c;
        }
    }
    let mut sum = 0.0;
    for (m, h, r) in stats {
        let p = if h == 0 { 0.0 } else { m as f64 / h as f64 };
        let rec = if r == 0 { 0.0 } else { m as f64 / r as f64 };
        if p + rec > 0.0 {
            sum += 5.0 * p * rec / (4.0 * p + rec);
        }
    }
    sum / 8.0 * 100.0
}

const WORDS: &[&str] = &[
    "зи", "хуьр", "чӀал", "ам", "атана", "ада", "лагьана", "the", "cat", "mat", "kitab", "şəhər", "bir",
    "и", "в", "год", ",", ".", "!", "«", "»", "1741", "a", "b",
];

pub fn random_sentence(rng: &mut impl Rng, max_tokens: usize) -> String {
    let n = rng.random_range(0..=max_tokens);
    let words: Vec<&str> = (0..n).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
    // Sometimes glue punctuation onto the previous word.
    let mut out = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 && !(w.len() == 1 && is_punct(w.chars().next().unwrap()) && rng.random_bool(0.5)) {
            out.push(' ');
        }
        out.push_str(w);
    }
    out
}

/// Up to 5 pairs of up to 12 tokens; references are never blank.
pub fn random_pairs(rng: &mut impl Rng) -> Vec<(String, String)> {
    let n = rng.random_range(1..=5);
    (0..n)
        .map(|_| {
            let reference = loop {
                let s = random_sentence(rng, 12);
                if !s.trim().is_empty() {
                    break s;
                }
            };
            let hyp = if rng.random_bool(0.3) {
                reference.clone()
            } else {
                random_sentence(rng, 12)
            };
            (hyp, reference)
        })
        .collect()
}

// ---------------------------------------------------------------- bpe

/// Recounts every pair of every word occurrence on each iteration.
pub fn brute_force_bpe(lines: &[String], num_merges: usize, eow: &str) -> Vec<(String, String)> {
    let mut words: Vec<Vec<String>> = Vec::new();
    for line in lines {
        for w in line.split_whitespace() {
            let mut syms: Vec<String> = w.chars().map(|c| c.to_string()).collect();
            let last = syms.len() - 1;
            syms[last] = format!("{}{}", syms[last], eow);
            words.push(syms);
        }
    }
    let mut merges = Vec::new();
    for _ in 0..num_merges {
        let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
        for w in &words {
            for i in 0..w.len().saturating_sub(1) {
                *counts.entry((w[i].clone(), w[i + 1].clone())).or_insert(0) += 1;
            }
        }
        // BTreeMap iterates in (left, right) order, so the first maximum wins ties.
        let mut best: Option<(&(String, String), usize)> = None;
        for (p, &c) in &counts {
            if best.map_or(true, |(_, bc)| c > bc) {
                best = Some((p, c));
            }
        }
        let Some((pair, count)) = best else { break };
        if count < 2 {
            break;
        }
        let pair = pair.clone();
        for w in words.iter_mut() {
            let mut out = Vec::new();
            let mut i = 0;
            while i < w.len() {
                if i + 1 < w.len() && w[i] == pair.0 && w[i + 1] == pair.1 {
                    out.push(format!("{}{}", pair.0, pair.1));
                    i += 2;
                } else {
                    out.push(w[i].clone());
                    i += 1;
                }
            }
            *w = out;
        }
        merges.push(pair);
    }
    merges
}

/// Small-alphabet corpus of at most `max_chars` characters.
pub fn random_corpus(rng: &mut impl Rng, max_chars: usize) -> Vec<String> {
    const ALPHABET: &[char] = &['а', 'б', 'в', 'Ӏ', 'к', 'a', 'b', 'c'];
    let budget = rng.random_range(1..=max_chars);
    let mut lines = Vec::new();
    let mut used = 0;
    while used < budget {
        let mut line = String::new();
        let words = rng.random_range(1..=4);
        for wi in 0..words {
            if wi > 0 {
                line.push(' ');
            }
            let len = rng.random_range(1..=6);
            let alpha = rng.random_range(2..=ALPHABET.len());
            for _ in 0..len {
                line.push(ALPHABET[rng.random_range(0..alpha)]);
            }
        }
        used += line.chars().count();
        if used > budget && !lines.is_empty() {
            break;
        }
        lines.push(line);
    }
    lines
}

// ---------------------------------------------------------------- align

fn o_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn o_pool(rows: &[Vec<f32>]) -> Vec<f64> {
    let d = rows[0].len();
    let mut acc = vec![0.0; d];
    for r in rows {
        for k in 0..d {
            acc[k] += r[k] as f64;
        }
    }
    let n = o_norm(&acc);
    if n == 0.0 {
        acc
    } else {
        acc.iter().map(|x| x / n).collect()
    }
}

fn o_cos(a: &[f64], b: &[f64]) -> f64 {
    let d = o_norm(a) * o_norm(b);
    if d == 0.0 {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / d
}

/// Bead shapes in tie-break preference order.
pub const SHAPES: [(usize, usize); 5] = [(1, 1), (2, 1), (1, 2), (1, 0), (0, 1)];

#[derive(Debug, Clone)]
pub struct OraclePath {
    /// (src_from, tgt_from, shape index into SHAPES)
    pub beads: Vec<(usize, usize, usize)>,
    pub cost: f64,
}

/// Enumerates every monotonic bead path and returns the minimum-cost one,
/// breaking near-ties by the preference order of the last bead, then the
/// one before it, and so on.
pub fn exhaustive_align(src: &[Vec<f32>], tgt: &[Vec<f32>], skip: f64) -> OraclePath {
    let mut all = Vec::new();
    let mut stack = Vec::new();
    enumerate(src, tgt, skip, 0, 0, 0.0, &mut stack, &mut all);
    let min = all.iter().map(|p| p.cost).fold(f64::INFINITY, f64::min);
    let mut best: Vec<OraclePath> = all.into_iter().filter(|p| p.cost <= min + 1e-12).collect();
    best.sort_by(|a, b| {
        let ka: Vec<usize> = a.beads.iter().rev().map(|b| b.2).collect();
        let kb: Vec<usize> = b.beads.iter().rev().map(|b| b.2).collect();
        ka.cmp(&kb)
    });
    best.remove(0)
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    src: &[Vec<f32>],
    tgt: &[Vec<f32>],
    skip: f64,
    i: usize,
    j: usize,
    cost: f64,
    stack: &mut Vec<(usize, usize, usize)>,
    out: &mut Vec<OraclePath>,
) {
    if i == src.len() && j == tgt.len() {
        out.push(OraclePath {
            beads: stack.clone(),
            cost,
        });
        return;
    }
    for (k, &(ds, dt)) in SHAPES.iter().enumerate() {
        if i + ds > src.len() || j + dt > tgt.len() {
            continue;
        }
        let step = if ds > 0 && dt > 0 {
            1.0 - o_cos(&o_pool(&src[i..i + ds]), &o_pool(&tgt[j..j + dt]))
        } else {
            skip
        };
        stack.push((i, j, k));
        enumerate(src, tgt, skip, i + ds, j + dt, cost + step, stack, out);
        stack.pop();
    }
}

/// Cost of a given bead sequence under the oracle's own arithmetic.
pub fn path_cost(src: &[Vec<f32>], tgt: &[Vec<f32>], skip: f64, beads: &[(usize, usize, usize)]) -> f64 {
    beads
        .iter()
        .map(|&(i, j, k)| {
            let (ds, dt) = SHAPES[k];
            if ds > 0 && dt > 0 {
                1.0 - o_cos(&o_pool(&src[i..i + ds]), &o_pool(&tgt[j..j + dt]))
            } else {
                skip
            }
        })
        .sum()
}

pub fn random_unit_vector(rng: &mut impl Rng, d: usize) -> Vec<f32> {
    loop {
        let v: Vec<f32> = (0..d).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        if n > 1e-3 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

pub fn one_hot(d: usize, axis: usize) -> Vec<f32> {
    let mut v = vec![0.0; d];
    v[axis] = 1.0;
    v
}

pub fn mean_normalized(rows: &[Vec<f32>]) -> Vec<f32> {
    o_pool(rows).into_iter().map(|x| x as f32).collect()
}

/// Source of orthogonal sentences; the target merges random adjacent runs
/// into 2-1 or 1-2 beads. Returns (src, tgt, expected shapes).
pub fn planted_instance(
    rng: &mut impl Rng,
    beads: usize,
) -> (Vec<Vec<f32>>, Vec<Vec<f32>>, Vec<(usize, usize)>) {
    let d = beads * 2 + 2;
    let mut axis = 0;
    let mut src = Vec::new();
    let mut tgt = Vec::new();
    let mut shapes = Vec::new();
    for _ in 0..beads {
        let shape = SHAPES[rng.random_range(0..3)];
        let base: Vec<Vec<f32>> = (0..shape.0.max(shape.1))
            .map(|_| {
                axis += 1;
                one_hot(d, axis - 1)
            })
            .collect();
        match shape {
            (1, 1) => {
                src.push(base[0].clone());
                tgt.push(base[0].clone());
            }
            (2, 1) => {
                src.extend(base.iter().cloned());
                tgt.push(mean_normalized(&base));
            }
            (1, 2) => {
                src.push(mean_normalized(&base));
                tgt.extend(base.iter().cloned());
            }
            _ => unreachable!(),
        }
        shapes.push(shape);
    }
    (src, tgt, shapes)
}

// ---------------------------------------------------------------- verses

/// (chapter, first, last, text)
pub type OEntry = (u32, u32, u32, String);

/// Every pair of contiguous entry ranges whose verse sets coincide and that
/// has no consistent proper prefix pair. Returns (a range, b range).
pub fn minimal_consistent_groups(a: &[OEntry], b: &[OEntry]) -> Vec<((usize, usize), (usize, usize))> {
    let verses = |e: &[OEntry]| -> BTreeSet<(u32, u32)> {
        e.iter()
            .flat_map(|(c, f, l, _)| (*f..=*l).map(move |v| (*c, v)))
            .collect()
    };
    let consistent = |i0: usize, i1: usize, j0: usize, j1: usize| verses(&a[i0..i1]) == verses(&b[j0..j1]);
    let mut out = Vec::new();
    for i0 in 0..a.len() {
        for i1 in i0 + 1..=a.len() {
            for j0 in 0..b.len() {
                for j1 in j0 + 1..=b.len() {
                    if !consistent(i0, i1, j0, j1) {
                        continue;
                    }
                    let mut minimal = true;
                    'outer: for pi in i0 + 1..=i1 {
                        for pj in j0 + 1..=j1 {
                            if (pi, pj) != (i1, j1) && consistent(i0, pi, j0, pj) {
                                minimal = false;
                                break 'outer;
                            }
                        }
                    }
                    // Also require that no neighbouring entry overlaps the group.
                    let group = verses(&a[i0..i1]);
                    let touches = |e: &[OEntry], lo: usize, hi: usize| {
                        e.iter().enumerate().any(|(k, x)| {
                            (k < lo || k >= hi) && !verses(std::slice::from_ref(x)).is_disjoint(&group)
                        })
                    };
                    if minimal && !touches(a, i0, i1) && !touches(b, j0, j1) {
                        out.push(((i0, i1), (j0, j1)));
                    }
                }
            }
        }
    }
    out
}

/// A random single-chapter verse document of up to `max` entries covering
/// a subset of verses 1..=8, with random merges.
pub fn random_verse_doc(rng: &mut impl Rng, max: usize, tag: &str) -> Vec<OEntry> {
    let mut out = Vec::new();
    let mut v = 1u32;
    while v <= 8 && out.len() < max {
        if rng.random_bool(0.15) {
            v += 1;
            continue;
        }
        let len = if rng.random_bool(0.3) { rng.random_range(2..=3) } else { 1 };
        let last = (v + len - 1).min(8);
        out.push((1, v, last, format!("{tag}{v}")));
        v = last + 1;
    }
    out
}

// ---------------------------------------------------------------- split

/// Apportionment by floating-point quotas and fractional-part ranking.
pub fn float_apportionment(counts: &[usize], seats: usize) -> Vec<usize> {
    let total: usize = counts.iter().sum();
    let exact: Vec<f64> = counts
        .iter()
        .map(|&c| seats as f64 * c as f64 / total as f64)
        .collect();
    let mut q: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let left = seats - q.iter().sum::<usize>();
    for &i in order.iter().take(left) {
        q[i] += 1;
    }
    q
}

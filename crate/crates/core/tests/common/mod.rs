#![allow(dead_code)]

use cgpp::{BinarySolution, ProblemInstance, UpperTriangular};

pub fn ut(rows: &[&[f64]]) -> UpperTriangular {
    UpperTriangular::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

pub fn bits(v: &[u8]) -> BinarySolution {
    BinarySolution::new(v.to_vec()).unwrap()
}

/// n=2, m=1, Q=[[1,-1],[.,1]], A=[[1,1],[.,-1]], b=(1)
pub fn e1() -> ProblemInstance {
    ProblemInstance::new(ut(&[&[1.0, -1.0], &[0.0, 1.0]]), vec![ut(&[&[1.0, 1.0], &[0.0, -1.0]])], vec![1.0]).unwrap()
}

/// n=2, m=1, Q=[[-1,-1],[.,-1]], A=[[1,1],[.,1]], b=(1)
pub fn e2() -> ProblemInstance {
    ProblemInstance::new(ut(&[&[-1.0, -1.0], &[0.0, -1.0]]), vec![ut(&[&[1.0, 1.0], &[0.0, 1.0]])], vec![1.0]).unwrap()
}

/// Constraint `3 x_1 + ... + 3 x_n <= -1` (diagonal), violated by every point.
pub fn infeasible_everywhere(n: usize) -> ProblemInstance {
    let mut a = UpperTriangular::zeros(n);
    for i in 0..n {
        a.set(i, i, 3.0);
    }
    let q = ProblemInstance::generate_random(n, 0, 99).objective_matrix().clone();
    ProblemInstance::new(q, vec![a], vec![-1.0]).unwrap()
}

/// Full-matrix double loop over every (i, j), reading only the upper triangle.
pub fn naive_form(m: &UpperTriangular, x: &[u8]) -> f64 {
    let n = m.size();
    let mut dense = vec![vec![0.0; n]; n];
    for (i, j, v) in m.entries() {
        dense[i][j] = v;
    }
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += dense[i][j] * x[i] as f64 * x[j] as f64;
        }
    }
    s
}

pub fn cube(n: usize) -> impl Iterator<Item = Vec<u8>> {
    (0..(1u64 << n)).map(move |mask| (0..n).map(|i| ((mask >> (n - 1 - i)) & 1) as u8).collect())
}

pub fn naive_feasible(inst: &ProblemInstance, x: &[u8]) -> bool {
    inst.constraint_matrices()
        .iter()
        .zip(inst.bounds())
        .all(|(a, &b)| naive_form(a, x) <= b)
}

/// Plain enumeration of the constrained optimum, lexicographic order.
pub fn naive_optimum(inst: &ProblemInstance) -> Option<(f64, Vec<u8>)> {
    let mut best: Option<(f64, Vec<u8>)> = None;
    for x in cube(inst.n()) {
        if !naive_feasible(inst, &x) {
            continue;
        }
        let e = naive_form(inst.objective_matrix(), &x);
        if best.as_ref().is_none_or(|(b, _)| e < *b) {
            best = Some((e, x));
        }
    }
    best
}

/// True when no single flip reaches a feasible point with lower objective.
pub fn one_flip_optimal(inst: &ProblemInstance, x: &BinarySolution) -> bool {
    let base = naive_form(inst.objective_matrix(), x.bits());
    (0..x.len()).all(|i| {
        let y = x.flipped(i);
        !naive_feasible(inst, y.bits()) || naive_form(inst.objective_matrix(), y.bits()) >= base
    })
}

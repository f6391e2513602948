//! Independent oracles shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use ipowdm_core::routing::Graph;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Simple graph as a weight matrix; `None` = no edge.
pub struct Dense {
    pub n: usize,
    pub w: Vec<Vec<Option<i64>>>,
}

impl Dense {
    pub fn edges(&self) -> Vec<(usize, usize, i64)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in a + 1..self.n {
                if let Some(w) = self.w[a][b] {
                    out.push((a, b, w));
                }
            }
        }
        out
    }

    pub fn graph(&self) -> Graph<i64> {
        Graph::from_edges(self.n, self.edges())
    }

    pub fn connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..self.n {
                if self.w[u][v].is_some() && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Every simple s-t path with its length.
    pub fn simple_paths(&self, s: usize, t: usize) -> Vec<(Vec<usize>, i64)> {
        fn go(d: &Dense, u: usize, t: usize, path: &mut Vec<usize>, len: i64, on: &mut [bool], out: &mut Vec<(Vec<usize>, i64)>) {
            if u == t {
                out.push((path.clone(), len));
                return;
            }
            for v in 0..d.n {
                if let Some(w) = d.w[u][v] {
                    if !on[v] {
                        on[v] = true;
                        path.push(v);
                        go(d, v, t, path, len + w, on, out);
                        path.pop();
                        on[v] = false;
                    }
                }
            }
        }
        let mut out = Vec::new();
        let mut on = vec![false; self.n];
        on[s] = true;
        go(self, s, t, &mut vec![s], 0, &mut on, &mut out);
        out
    }

    /// O(n^2) Dijkstra over the matrix, skipping banned nodes and edges.
    pub fn shortest_avoiding(&self, s: usize, t: usize, banned_node: &[bool], banned_edge: &[Vec<bool>]) -> Option<i64> {
        let mut dist = vec![i64::MAX; self.n];
        let mut done = vec![false; self.n];
        dist[s] = 0;
        loop {
            let u = (0..self.n).filter(|&v| !done[v] && dist[v] < i64::MAX).min_by_key(|&v| dist[v])?;
            if u == t {
                return Some(dist[t]);
            }
            done[u] = true;
            for v in 0..self.n {
                if let Some(w) = self.w[u][v] {
                    if !banned_node[v] && !banned_edge[u][v] && dist[u] + w < dist[v] {
                        dist[v] = dist[u] + w;
                    }
                }
            }
        }
    }

    /// Minimum combined length over link- and node-disjoint pairs: every
    /// simple path as the first leg, the cheapest path avoiding it as the second.
    pub fn best_pair(&self, s: usize, t: usize) -> Option<i64> {
        let mut best: Option<i64> = None;
        for (p, len) in self.simple_paths(s, t) {
            let mut bn = vec![false; self.n];
            for &v in &p[1..p.len() - 1] {
                bn[v] = true;
            }
            let mut be = vec![vec![false; self.n]; self.n];
            for w in p.windows(2) {
                be[w[0]][w[1]] = true;
                be[w[1]][w[0]] = true;
            }
            if let Some(l2) = self.shortest_avoiding(s, t, &bn, &be) {
                best = Some(best.map_or(len + l2, |b| b.min(len + l2)));
            }
        }
        best
    }
}

pub fn random_dense(rng: &mut ChaCha8Rng, n: usize) -> Dense {
    let p: f64 = rng.random_range(0.2..0.8);
    loop {
        let mut w = vec![vec![None; n]; n];
        for a in 0..n {
            for b in a + 1..n {
                if rng.random_bool(p) {
                    let x = rng.random_range(1..=20);
                    w[a][b] = Some(x);
                    w[b][a] = Some(x);
                }
            }
        }
        let d = Dense { n, w };
        if d.connected() {
            return d;
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

/// Incoherent GN integral for the center channel of an `n`-channel comb of
/// rectangular spectra, one span, by nested quadrature. Returns eta in 1/W^2.
///
/// The inner integral over f2 is done in the variable theta = atan(f2/s)
/// that flattens the link-function Lorentzian.
pub fn eta_quadrature(length_km: f64, n: usize) -> f64 {
    let a_pow = 0.2 / (10.0 * std::f64::consts::E.log10());
    let alpha = a_pow / 2.0;
    let b2 = 21.7e-24;
    let gamma = 1.3;
    let (rs, df) = (64e9, 75e9);
    let l = length_km;
    let half = (n / 2) as i64;
    let cent: Vec<f64> = (-half..=half).map(|k| k as f64 * df).collect();
    let (xi, wi) = gauss_legendre(48);
    let (xo, wo) = gauss_legendre(20);
    let pi = std::f64::consts::PI;

    let inner = |f1: f64| -> f64 {
        let k = 4.0 * pi * pi * b2 * f1;
        let mut tot = 0.0;
        for &cj in &cent {
            for &ck in &cent {
                let a = (cj - rs / 2.0).max(ck - rs / 2.0 - f1);
                let b = (cj + rs / 2.0).min(ck + rs / 2.0 - f1);
                if b <= a {
                    continue;
                }
                if k.abs() < 1e-30 {
                    tot += (b - a) * (1.0 - (-2.0 * alpha * l).exp()).powi(2) / (4.0 * alpha * alpha);
                    continue;
                }
                let s = 2.0 * alpha / k.abs();
                let (ta, tb) = ((a / s).atan(), (b / s).atan());
                let m = (((tb - ta).abs() / 0.02) as usize).max(1);
                let h = (tb - ta) / m as f64;
                for seg in 0..m {
                    let (u, v) = (ta + seg as f64 * h, ta + (seg + 1) as f64 * h);
                    let mut acc = 0.0;
                    for (x, w) in xi.iter().zip(&wi) {
                        let th = (u + v) / 2.0 + (v - u) / 2.0 * x;
                        let num = 1.0 + (-4.0 * alpha * l).exp() - 2.0 * (-2.0 * alpha * l).exp() * (2.0 * alpha * l * th.tan()).cos();
                        acc += w * num;
                    }
                    tot += acc * (v - u) / 2.0 / (2.0 * alpha * k.abs());
                }
            }
        }
        tot
    };

    let mut total = 0.0;
    for &ci in &cent {
        let (a, b) = (ci - rs / 2.0, ci + rs / 2.0);
        let pts: Vec<f64> = if a < 0.0 && 0.0 < b {
            // geometric refinement toward the f1 = 0 kink
            let g: Vec<f64> = (0..50).map(|i| 1e3 * (rs / 2.0 / 1e3).powf(i as f64 / 49.0)).collect();
            let mut p: Vec<f64> = vec![a, b, 0.0];
            p.extend(g.iter().copied());
            p.extend(g.iter().map(|x| -x));
            p.sort_by(|x, y| x.partial_cmp(y).unwrap());
            p.dedup();
            p
        } else {
            (0..7).map(|i| a + (b - a) * i as f64 / 6.0).collect()
        };
        for pair in pts.windows(2) {
            let (u, v) = (pair[0], pair[1]);
            let s: f64 = xo.iter().zip(&wo).map(|(x, w)| w * inner((u + v) / 2.0 + (v - u) / 2.0 * x)).sum();
            total += s * (v - u) / 2.0;
        }
    }
    16.0 / 27.0 * gamma * gamma * total / (rs * rs)
}

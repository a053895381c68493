//! Density-based clustering (DBSCAN).
//!
//! A point is core when at least `min_pts` points, itself included, lie
//! within Euclidean distance `eps`. Points are scanned in input order and a
//! border point joins the first cluster that reaches it, so the output is
//! deterministic.

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Cluster(usize),
    Noise,
}

impl Label {
    pub fn cluster(self) -> Option<usize> {
        match self {
            Label::Cluster(k) => Some(k),
            Label::Noise => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterLabeling {
    pub labels: Vec<Label>,
}

impl ClusterLabeling {
    pub fn n_clusters(&self) -> usize {
        self.labels
            .iter()
            .filter_map(|l| l.cluster())
            .max()
            .map_or(0, |k| k + 1)
    }

    /// Member indices of every cluster, in cluster order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters()];
        for (i, l) in self.labels.iter().enumerate() {
            if let Label::Cluster(k) = l {
                out[*k].push(i);
            }
        }
        out
    }

    pub fn noise(&self) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == Label::Noise)
            .collect()
    }
}

/// Neighbour lists (including the point itself) for every row of `points`.
pub fn neighborhoods(points: &DMatrix<f64>, eps: f64, exec: Exec) -> Vec<Vec<usize>> {
    let n = points.nrows();
    let eps2 = eps * eps;
    exec.map_range(n, |i| {
        (0..n)
            .filter(|&j| {
                let mut d2 = 0.0;
                for c in 0..points.ncols() {
                    let d = points[(i, c)] - points[(j, c)];
                    d2 += d * d;
                }
                d2 <= eps2
            })
            .collect()
    })
}

pub fn dbscan(points: &DMatrix<f64>, eps: f64, min_pts: usize) -> ClusterLabeling {
    dbscan_with(points, eps, min_pts, Exec::default())
}

/// DBSCAN over the rows of `points`. The neighbourhood queries run under
/// `exec`; labelling is sequential.
pub fn dbscan_with(points: &DMatrix<f64>, eps: f64, min_pts: usize, exec: Exec) -> ClusterLabeling {
    assert!(eps > 0.0, "eps must be positive");
    assert!(min_pts >= 1, "min_pts must be at least 1");
    let n = points.nrows();
    let neighbors = neighborhoods(points, eps, exec);
    let is_core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_pts).collect();

    let mut labels: Vec<Option<Label>> = vec![None; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for i in 0..n {
        if labels[i].is_some() {
            continue;
        }
        if !is_core[i] {
            labels[i] = Some(Label::Noise);
            continue;
        }
        let cluster = next;
        next += 1;
        labels[i] = Some(Label::Cluster(cluster));
        queue.push_back(i);
        while let Some(p) = queue.pop_front() {
            for &q in &neighbors[p] {
                match labels[q] {
                    None => {
                        labels[q] = Some(Label::Cluster(cluster));
                        if is_core[q] {
                            queue.push_back(q);
                        }
                    }
                    // Previously marked noise: reachable, so a border point.
                    Some(Label::Noise) => labels[q] = Some(Label::Cluster(cluster)),
                    Some(Label::Cluster(_)) => {}
                }
            }
        }
    }
    ClusterLabeling {
        labels: labels
            .into_iter()
            .map(|l| l.unwrap_or(Label::Noise))
            .collect(),
    }
}

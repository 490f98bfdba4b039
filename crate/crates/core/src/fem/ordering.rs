//! Reverse Cuthill-McKee ordering for profile reduction.

use std::collections::VecDeque;

/// Returns `order` with `order[k]` = vertex placed at position `k`.
pub fn reverse_cuthill_mckee(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let degree: Vec<usize> = adjacency.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    while order.len() < n {
        let seed = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| degree[v])
            .unwrap();
        let start = pseudo_peripheral(adjacency, seed, &visited);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = adjacency[v]
                .iter()
                .copied()
                .filter(|&w| !visited[w])
                .collect();
            nbrs.sort_by_key(|&w| (degree[w], w));
            for w in nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(adjacency: &[Vec<usize>], start: usize, blocked: &[bool]) -> Vec<Option<usize>> {
    let mut level = vec![None; adjacency.len()];
    level[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        let lv = level[v].unwrap();
        for &w in &adjacency[v] {
            if !blocked[w] && level[w].is_none() {
                level[w] = Some(lv + 1);
                queue.push_back(w);
            }
        }
    }
    level
}

fn pseudo_peripheral(adjacency: &[Vec<usize>], seed: usize, blocked: &[bool]) -> usize {
    let mut v = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let level = bfs_levels(adjacency, v, blocked);
        let (far, depth) = level
            .iter()
            .enumerate()
            .filter_map(|(w, l)| l.map(|l| (w, l)))
            .max_by_key(|&(w, l)| (l, std::cmp::Reverse(adjacency[w].len())))
            .unwrap();
        if depth <= ecc {
            break;
        }
        ecc = depth;
        v = far;
    }
    v
}

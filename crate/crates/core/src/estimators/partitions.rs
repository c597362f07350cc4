//! Set partitions of `{0, .., n-1}`.

/// All set partitions of `{0, .., n-1}`, blocks listed in order of their
/// smallest element. Counts are the Bell numbers 1, 1, 2, 5, 15, 52, ...
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    grow(0, n, &mut blocks, &mut out);
    out
}

fn grow(k: usize, n: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
    if k == n {
        out.push(blocks.clone());
        return;
    }
    for b in 0..blocks.len() {
        blocks[b].push(k);
        grow(k + 1, n, blocks, out);
        blocks[b].pop();
    }
    blocks.push(vec![k]);
    grow(k + 1, n, blocks, out);
    blocks.pop();
}

/// Möbius weight of a partition with `s` blocks against the finest one:
/// `(-1)^(s-1) (s-1)!`.
pub fn mobius_weight(s: usize) -> f64 {
    let mut f = 1.0;
    for k in 1..s {
        f *= k as f64;
    }
    if (s - 1) % 2 == 0 {
        f
    } else {
        -f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        let counts: Vec<usize> = (0..=6).map(|n| set_partitions(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 5, 15, 52, 203]);
    }

    #[test]
    fn partitions_cover_each_element_once() {
        for p in set_partitions(4) {
            let mut all: Vec<usize> = p.iter().flatten().copied().collect();
            all.sort();
            assert_eq!(all, vec![0, 1, 2, 3]);
        }
    }
}

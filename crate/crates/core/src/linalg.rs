//! Row reduction over F_p on dense `Vec<Vec<u32>>` matrices.

pub fn inv_mod(a: u32, p: u32) -> u32 {
    assert!(a % p != 0, "zero has no inverse");
    pow_mod(a, p - 2, p)
}

pub fn pow_mod(base: u32, mut exp: u32, p: u32) -> u32 {
    let m = p as u64;
    let mut b = base as u64 % m;
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u32
}

pub fn dot(a: &[u32], b: &[u32], p: u32) -> u32 {
    let m = p as u64;
    (a.iter().zip(b).map(|(&x, &y)| x as u64 * y as u64 % m).sum::<u64>() % m) as u32
}

/// `a - c * b` in place.
pub fn sub_scaled(a: &mut [u32], b: &[u32], c: u32, p: u32) {
    if c == 0 {
        return;
    }
    let m = p as u64;
    for (x, &y) in a.iter_mut().zip(b) {
        let t = c as u64 * y as u64 % m;
        *x = ((*x as u64 + m - t) % m) as u32;
    }
}

pub fn scale(a: &mut [u32], c: u32, p: u32) {
    let m = p as u64;
    for x in a.iter_mut() {
        *x = (*x as u64 * c as u64 % m) as u32;
    }
}

/// Reduced row echelon form. Zero rows are dropped; returns the pivot column
/// of each remaining row (strictly increasing).
pub fn rref(rows: &mut Vec<Vec<u32>>, p: u32) -> Vec<usize> {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(pr) = (r..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(r, pr);
        let inv = inv_mod(rows[r][c], p);
        scale(&mut rows[r], inv, p);
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                sub_scaled(row, &pivot_row, f, p);
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    pivots
}

pub fn rank(rows: &[Vec<u32>], p: u32) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m, p).len()
}

/// Reduce `v` against an RREF basis; the result is zero iff `v` lies in the span.
pub fn reduce(v: &mut [u32], basis: &[Vec<u32>], pivots: &[usize], p: u32) {
    for (row, &c) in basis.iter().zip(pivots) {
        let f = v[c];
        sub_scaled(v, row, f, p);
    }
}

pub fn in_span(v: &[u32], basis: &[Vec<u32>], pivots: &[usize], p: u32) -> bool {
    let mut w = v.to_vec();
    reduce(&mut w, basis, pivots, p);
    w.iter().all(|&x| x == 0)
}

pub fn invert(matrix: &[Vec<u32>], p: u32) -> Option<Vec<Vec<u32>>> {
    let n = matrix.len();
    let mut aug: Vec<Vec<u32>> = matrix
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| u32::from(i == j)));
            r
        })
        .collect();
    let pivots = rref(&mut aug, p);
    if pivots.len() != n || pivots.iter().enumerate().any(|(i, &c)| c != i) {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn mat_vec(matrix: &[Vec<u32>], v: &[u32], p: u32) -> Vec<u32> {
    matrix.iter().map(|row| dot(row, v, p)).collect()
}

pub fn mat_mul(a: &[Vec<u32>], b: &[Vec<u32>], p: u32) -> Vec<Vec<u32>> {
    let n = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| {
                    let col: Vec<u32> = b.iter().map(|r| r[j]).collect();
                    dot(row, &col, p)
                })
                .collect()
        })
        .collect()
}

pub fn transpose(a: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let n = a.first().map_or(0, Vec::len);
    (0..n).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// Basis of `{x : rows · x = 0}` in `ncols` unknowns.
pub fn kernel(rows: &[Vec<u32>], ncols: usize, p: u32) -> Vec<Vec<u32>> {
    let mut m = rows.to_vec();
    let pivots = rref(&mut m, p);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![0u32; ncols];
            v[f] = 1;
            for (row, &c) in m.iter().zip(&pivots) {
                v[c] = (p - row[f]) % p;
            }
            v
        })
        .collect()
}

/// Unit vectors that extend the (independent) `rows` to a basis of F_p^n.
pub fn complete_basis(rows: &[Vec<u32>], n: usize, p: u32) -> Vec<Vec<u32>> {
    let mut current = rows.to_vec();
    let mut extra = Vec::new();
    for i in 0..n {
        if current.len() == n {
            break;
        }
        let mut e = vec![0u32; n];
        e[i] = 1;
        let mut trial = current.clone();
        trial.push(e.clone());
        if rank(&trial, p) == trial.len() {
            current.push(e.clone());
            extra.push(e);
        }
    }
    extra
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let p = 7;
        let m = vec![vec![1, 2], vec![3, 4]];
        let inv = invert(&m, p).unwrap();
        assert_eq!(mat_mul(&m, &inv, p), vec![vec![1, 0], vec![0, 1]]);
        assert!(invert(&[vec![1, 2], vec![2, 4]], p).is_none());
    }

    #[test]
    fn kernel_is_annihilated() {
        let p = 5;
        let rows = vec![vec![1, 2, 3, 4], vec![0, 1, 1, 1]];
        let k = kernel(&rows, 4, p);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!(mat_vec(&rows, v, p).iter().all(|&x| x == 0));
        }
    }

    #[test]
    fn completion_gives_full_rank() {
        let p = 11;
        let rows = vec![vec![0, 3, 1]];
        let mut all = rows.clone();
        all.extend(complete_basis(&rows, 3, p));
        assert_eq!(all.len(), 3);
        assert_eq!(rank(&all, p), 3);
    }
}

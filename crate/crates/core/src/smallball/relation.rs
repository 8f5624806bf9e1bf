use super::{Result, SmallBallError};

/// Fraction-free (Bareiss) determinant with checked `i128` arithmetic.
fn bareiss_det(mut m: Vec<Vec<i128>>) -> Result<i128> {
    let n = m.len();
    if n == 0 {
        return Ok(1);
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&i| m[i][k] != 0) else {
                return Ok(0);
            };
            m.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = m[i][j]
                    .checked_mul(m[k][k])
                    .and_then(|a| m[i][k].checked_mul(m[k][j]).and_then(|b| a.checked_sub(b)))
                    .ok_or(SmallBallError::Overflow)?;
                m[i][j] = num / prev;
            }
        }
        prev = m[k][k];
    }
    m[n - 1][n - 1].checked_mul(sign).ok_or(SmallBallError::Overflow)
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Primitive integer vector (gcd 1), sign unchanged.
fn primitive(v: Vec<i128>) -> Vec<i128> {
    let g = v.iter().fold(0, |g, &x| gcd(g, x));
    if g <= 1 {
        v
    } else {
        v.into_iter().map(|x| x / g).collect()
    }
}

/// A nonzero integer vector in the kernel of the `r x (r + 1)` matrix whose
/// columns are the inputs, by fraction-free elimination to row echelon form.
fn kernel_vector(columns: &[Vec<i128>]) -> Result<Vec<i128>> {
    let cols = columns.len();
    let rows = columns[0].len();
    let mut m: Vec<Vec<i128>> = (0..rows).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for col in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| m[i][col] != 0) else {
            continue;
        };
        m.swap(r, p);
        for i in 0..rows {
            if i == r || m[i][col] == 0 {
                continue;
            }
            let (a, b) = (m[r][col], m[i][col]);
            for j in 0..cols {
                m[i][j] = m[i][j]
                    .checked_mul(a)
                    .and_then(|x| m[r][j].checked_mul(b).and_then(|y| x.checked_sub(y)))
                    .ok_or(SmallBallError::Overflow)?;
            }
            let g = m[i].iter().fold(0, |g, &x| gcd(g, x));
            if g > 1 {
                m[i].iter_mut().for_each(|x| *x /= g);
            }
        }
        pivots.push(col);
        r += 1;
    }
    // a free column exists since cols > rows
    let free = (0..cols).find(|c| !pivots.contains(c)).expect("more columns than rows");
    // Solve with x_free = L and back-substitute over the reduced rows; L is
    // the product of pivot entries so every division is exact.
    let scale = pivots
        .iter()
        .enumerate()
        .try_fold(1i128, |acc, (row, &col)| acc.checked_mul(m[row][col]))
        .ok_or(SmallBallError::Overflow)?;
    let mut x = vec![0i128; cols];
    x[free] = scale;
    for (row, &col) in pivots.iter().enumerate() {
        let num = m[row][free].checked_mul(scale).ok_or(SmallBallError::Overflow)?;
        x[col] = -num / m[row][col];
    }
    Ok(primitive(x))
}

/// Integer coefficients `alpha != 0` with `sum alpha_i q_i = 0` for `r + 1`
/// coordinate vectors `q_i` in `Z^r`.
///
/// `alpha_i = (-1)^i det(Q without row i)`, the cofactor expansion of the
/// singular `(r+1) x (r+1)` matrix obtained by repeating any column. If every
/// minor vanishes the rows are dependent at lower rank and an exact kernel
/// vector is used instead. The result is divided by its content.
pub fn gap_integer_relation(coords: &[Vec<i64>]) -> Result<Vec<i64>> {
    let count = coords.len();
    if count == 0 {
        return Err(SmallBallError::RelationShape("no vectors".into()));
    }
    let r = count - 1;
    if let Some(bad) = coords.iter().find(|q| q.len() != r) {
        return Err(SmallBallError::RelationShape(format!(
            "{count} vectors need {r} coordinates each, got {}",
            bad.len()
        )));
    }
    if coords.iter().flatten().all(|&x| x == 0) {
        return Err(SmallBallError::ZeroInput);
    }
    let rows: Vec<Vec<i128>> = coords.iter().map(|q| q.iter().map(|&x| x as i128).collect()).collect();
    let mut alpha = Vec::with_capacity(count);
    for i in 0..count {
        let minor: Vec<Vec<i128>> = rows
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i)
            .map(|(_, q)| q.clone())
            .collect();
        let det = bareiss_det(minor)?;
        alpha.push(if i % 2 == 0 { det } else { -det });
    }
    let alpha = if alpha.iter().all(|&a| a == 0) {
        kernel_vector(&rows)?
    } else {
        primitive(alpha)
    };
    assert!(annihilates(&rows, &alpha)?, "integer relation failed to annihilate");
    alpha
        .into_iter()
        .map(|a| i64::try_from(a).map_err(|_| SmallBallError::Overflow))
        .collect()
}

fn annihilates(rows: &[Vec<i128>], alpha: &[i128]) -> Result<bool> {
    let r = rows.first().map_or(0, Vec::len);
    for j in 0..r {
        let mut acc = 0i128;
        for (q, &a) in rows.iter().zip(alpha) {
            acc = q[j]
                .checked_mul(a)
                .and_then(|t| acc.checked_add(t))
                .ok_or(SmallBallError::Overflow)?;
        }
        if acc != 0 {
            return Ok(false);
        }
    }
    Ok(alpha.iter().any(|&a| a != 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn check(coords: &[Vec<i64>], alpha: &[i64]) {
        assert!(alpha.iter().any(|&a| a != 0));
        for j in 0..coords.len() - 1 {
            let s: i128 = coords.iter().zip(alpha).map(|(q, &a)| q[j] as i128 * a as i128).sum();
            assert_eq!(s, 0);
        }
    }

    #[test]
    fn rank_one_cross_multiplication() {
        assert_eq!(gap_integer_relation(&[vec![2], vec![5]]).unwrap(), vec![5, -2]);
    }

    #[test]
    fn rank_two_hand_example() {
        let coords = [vec![1, 0], vec![0, 1], vec![2, 3]];
        let alpha = gap_integer_relation(&coords).unwrap();
        assert!(alpha == vec![2, 3, -1] || alpha == vec![-2, -3, 1]);
    }

    #[test]
    fn degenerate_minors_use_kernel() {
        // all three vectors on one line: every 2x2 minor vanishes
        let coords = [vec![1, 2], vec![2, 4], vec![3, 6]];
        let alpha = gap_integer_relation(&coords).unwrap();
        check(&coords, &alpha);
        let coords = [vec![0, 0], vec![0, 0], vec![0, 5]];
        check(&coords, &gap_integer_relation(&coords).unwrap());
    }

    #[test]
    fn random_inputs_annihilate() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let r = rng.random_range(1..=4);
            let coords: Vec<Vec<i64>> = (0..=r)
                .map(|_| (0..r).map(|_| rng.random_range(-50..=50)).collect())
                .collect();
            if coords.iter().flatten().all(|&x| x == 0) {
                continue;
            }
            check(&coords, &gap_integer_relation(&coords).unwrap());
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            gap_integer_relation(&[vec![0], vec![0]]),
            Err(SmallBallError::ZeroInput)
        ));
        assert!(matches!(
            gap_integer_relation(&[vec![1, 2], vec![3]]),
            Err(SmallBallError::RelationShape(_))
        ));
        assert!(gap_integer_relation(&[]).is_err());
    }
}

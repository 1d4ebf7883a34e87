//! Exact Euclidean distance transform.
//!
//! Separable lower-envelope algorithm (Felzenszwalb–Huttenlocher): a 1-D
//! squared-distance transform applied along each axis in turn. O(total
//! cells) per axis, exact for distances between cell centers.

const INF: f64 = 1e20;

/// 1-D squared distance transform of a sampled cost `f` (in cell units):
/// `d[i] = min_j (i - j)^2 + f[j]`.
fn dt_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = -INF;
    z[1] = INF;
    for q in 1..n {
        let mut s;
        loop {
            let p = v[k];
            s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= z[k] {
                if k == 0 {
                    break;
                }
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = INF;
    }
    k = 0;
    for (q, dq) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let diff = q as f64 - p as f64;
        *dq = diff * diff + f[p];
    }
}

/// Squared distance (in cell units) from every cell center to the nearest
/// `true` cell center. `nn` cells per axis, dimension `n` (2 or 3), data
/// layout x₁ fastest.
pub fn squared_distance_cells(mask: &[bool], nn: usize, n: usize) -> Vec<f64> {
    assert!(n == 2 || n == 3);
    assert_eq!(mask.len(), nn.pow(n as u32));
    let mut grid: Vec<f64> = mask.iter().map(|&m| if m { 0.0 } else { INF }).collect();

    // pass along x1 (contiguous lines)
    crate::par::for_each_chunk_mut(&mut grid, nn, |_, line| {
        let f = line.to_vec();
        let mut v = vec![0usize; nn];
        let mut z = vec![0.0f64; nn + 1];
        dt_1d(&f, line, &mut v, &mut z);
    });

    // remaining axes: gather a pencil, transform, scatter back
    let lines = grid.len() / nn;
    for axis in 1..n {
        let stride = nn.pow(axis as u32);
        let pencils: Vec<(usize, Vec<f64>)> = crate::par::map_indexed(lines, |p| {
            let block = nn * stride;
            let base = (p / stride) * block + (p % stride);
            let mut f = vec![0.0f64; nn];
            for (i, fi) in f.iter_mut().enumerate() {
                *fi = grid[base + i * stride];
            }
            let mut d = vec![0.0f64; nn];
            let mut v = vec![0usize; nn];
            let mut z = vec![0.0f64; nn + 1];
            dt_1d(&f, &mut d, &mut v, &mut z);
            (base, d)
        });
        for (base, d) in pencils {
            for (i, di) in d.iter().enumerate() {
                grid[base + i * stride] = *di;
            }
        }
    }
    grid
}

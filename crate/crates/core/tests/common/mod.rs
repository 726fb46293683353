#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tangible_core::spatial::{Mat4, Orientation, Pose, Vec3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn vec3(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    Vec3::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

pub fn orientation(rng: &mut ChaCha8Rng) -> Orientation {
    loop {
        let q = Orientation {
            w: rng.gen_range(-1.0..1.0),
            x: rng.gen_range(-1.0..1.0),
            y: rng.gen_range(-1.0..1.0),
            z: rng.gen_range(-1.0..1.0),
        };
        let n = q.norm();
        if n > 0.1 && n <= 1.0 {
            return q.normalized().unwrap();
        }
    }
}

pub fn pose(rng: &mut ChaCha8Rng, scale: f64) -> Pose {
    Pose::new(vec3(rng, scale), orientation(rng))
}

/// Plain triple-loop matrix product.
pub fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn mat_inverse(m: &Mat4) -> Mat4 {
    let mut a = *m;
    let mut inv = [[0.0; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..4 {
        let pivot = (col..4).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        assert!(p.abs() > 1e-12, "singular matrix");
        for j in 0..4 {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..4 {
            if r != col {
                let f = a[r][col];
                for j in 0..4 {
                    a[r][j] -= f * a[col][j];
                    inv[r][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv
}

pub fn mat_apply(m: &Mat4, p: Vec3) -> Vec3 {
    let c = mat_apply4(m, p);
    Vec3::new(c[0] / c[3], c[1] / c[3], c[2] / c[3])
}

/// Homogeneous product with `(p, 1)`, without the divide.
pub fn mat_apply4(m: &Mat4, p: Vec3) -> [f64; 4] {
    let h = [p.x, p.y, p.z, 1.0];
    let row = |i: usize| (0..4).map(|k| m[i][k] * h[k]).sum::<f64>();
    [row(0), row(1), row(2), row(3)]
}

pub fn mat_max_diff(a: &Mat4, b: &Mat4) -> f64 {
    let mut d = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            d = d.max((a[i][j] - b[i][j]).abs());
        }
    }
    d
}

//! Small fixed-size linear algebra: 3-vectors, the spiral matrix `A`,
//! its exponential (a rotation about the z axis) and the reflection `rho`.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const E1: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const E2: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const E3: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Unit vector in the direction of `self`; the zero vector is returned unchanged.
    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            self / n
        }
    }

    /// Largest absolute component.
    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, k: f64) -> Vec3 {
        Vec3::new(self.x / k, self.y / k, self.z / k)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// The antisymmetry parameter `a` of `A = [[0,-a,0],[a,0,0],[0,0,0]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AntisymParam {
    pub a: f64,
}

impl AntisymParam {
    pub fn new(a: f64) -> Self {
        AntisymParam { a }
    }

    /// `A v`.
    pub fn apply(self, v: Vec3) -> Vec3 {
        apply_a(self.a, v)
    }

    pub fn matrix(self) -> Mat3 {
        Mat3 {
            m: [[0.0, -self.a, 0.0], [self.a, 0.0, 0.0], [0.0, 0.0, 0.0]],
        }
    }
}

/// `A v` for the spiral matrix with parameter `a`.
pub fn apply_a(a: f64, v: Vec3) -> Vec3 {
    Vec3::new(-a * v.y, a * v.x, 0.0)
}

/// `(I + A) v`.
pub fn apply_plus_a(a: f64, v: Vec3) -> Vec3 {
    Vec3::new(v.x - a * v.y, v.y + a * v.x, v.z)
}

/// `(I + A)^{-1} v`. Only the xy block is touched; its determinant is `1 + a^2`.
pub fn apply_inv_plus_a(a: f64, v: Vec3) -> Vec3 {
    let det = 1.0 + a * a;
    Vec3::new((v.x + a * v.y) / det, (v.y - a * v.x) / det, v.z)
}

/// Dense 3x3 matrix, row major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3 {
    pub m: [[f64; 3]; 3],
}

/// Orthogonal 3x3 matrix. Exponentials of `A` have det +1; compositions with
/// `rho`-type reflections are allowed to have det -1.
pub type Rotation3 = Mat3;

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn from_rows(r0: Vec3, r1: Vec3, r2: Vec3) -> Mat3 {
        Mat3 {
            m: [r0.to_array(), r1.to_array(), r2.to_array()],
        }
    }

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Mat3 {
        Mat3::from_rows(c0, c1, c2).transpose()
    }

    pub fn diag(d0: f64, d1: f64, d2: f64) -> Mat3 {
        Mat3 {
            m: [[d0, 0.0, 0.0], [0.0, d1, 0.0], [0.0, 0.0, d2]],
        }
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.m;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn mul(&self, o: &Mat3) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = (0..3).map(|k| self.m[i][k] * o.m[k][j]).sum();
            }
        }
        Mat3 { m: r }
    }

    pub fn transpose(&self) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.m[j][i];
            }
        }
        Mat3 { m: r }
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    /// Max-abs entry of `self - o`.
    pub fn max_abs_diff(&self, o: &Mat3) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.m[i][j] - o.m[i][j]).abs());
            }
        }
        d
    }
}

/// `e^{A u}`: rotation about the z axis by the angle `a u`.
pub fn rotation_exp(a: f64, u: f64) -> Rotation3 {
    let (sn, cs) = (a * u).sin_cos();
    Mat3 {
        m: [[cs, -sn, 0.0], [sn, cs, 0.0], [0.0, 0.0, 1.0]],
    }
}

/// Apply `e^{A u}` without building the matrix.
pub fn rotate_z(a: f64, u: f64, v: Vec3) -> Vec3 {
    let (sn, cs) = (a * u).sin_cos();
    Vec3::new(cs * v.x - sn * v.y, sn * v.x + cs * v.y, v.z)
}

/// `rho = diag(-1, -1, 1)`, the half turn about the z axis.
pub const RHO: Mat3 = Mat3 {
    m: [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]],
};

pub fn rho(v: Vec3) -> Vec3 {
    Vec3::new(-v.x, -v.y, v.z)
}

/// Angle between two nonzero vectors, in `[0, pi]`.
pub fn angle_between(u: Vec3, v: Vec3) -> f64 {
    // atan2 form stays accurate near 0 and pi
    u.cross(v).norm().atan2(u.dot(v))
}

/// The rotation taking the pair `(u0, v0)` onto `(u1, v1)`. Both pairs must be
/// unit vectors enclosing the same angle, strictly between 0 and pi.
pub fn align_pairs(u0: Vec3, v0: Vec3, u1: Vec3, v1: Vec3) -> Rotation3 {
    let frame = |u: Vec3, v: Vec3| {
        let e1 = (u + v).normalized();
        let e2 = (u - v).normalized();
        Mat3::from_cols(e1, e2, e1.cross(e2))
    };
    frame(u1, v1).mul(&frame(u0, v0).transpose())
}

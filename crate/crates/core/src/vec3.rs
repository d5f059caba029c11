use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

/// Plain 3-vector. The third component is the field-aligned (z) direction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Perpendicular projection `(x, y, 0)`.
    pub fn perp(self) -> Vec3 {
        Vec3::new(self.x, self.y, 0.0)
    }

    /// Rotated perpendicular part `(−y, x, 0)`.
    pub fn rot(self) -> Vec3 {
        Vec3::new(-self.y, self.x, 0.0)
    }

    /// Dot product of the perpendicular parts.
    pub fn dot_perp(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm_perp(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
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

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        Vec3::new(self * v.x, self * v.y, self * v.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        s * self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rot_is_quarter_turn() {
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(v.rot(), Vec3::new(-2.0, 1.0, 0.0));
        assert_eq!(v.rot().dot(v), 0.0);
        assert_eq!(v.rot().rot(), -v.perp());
    }
}

use splat_core::math::{Mat3, Vec3};

/// Pinhole camera: rigid world-to-camera transform plus focal lengths in
/// pixels. Camera space is x-right, y-down, z-forward (depth positive);
/// pixel (0, 0) is the top-left corner.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    /// World-to-camera rotation (rows: right, down, forward).
    pub rotation: Mat3,
    /// `q = rotation * p + translation`.
    pub translation: Vec3,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub near: f64,
}

impl Camera {
    pub fn look_at(
        eye: Vec3,
        target: Vec3,
        up: Vec3,
        fov_y_degrees: f64,
        width: usize,
        height: usize,
        near: f64,
    ) -> Camera {
        let forward = (target - eye)
            .normalized(1e-12)
            .expect("camera target must differ from eye");
        let right = forward
            .cross(up)
            .normalized(1e-9)
            .expect("camera up must not be parallel to the view direction");
        let down = forward.cross(right);
        let rotation = Mat3::from_rows(
            [right.x, right.y, right.z],
            [down.x, down.y, down.z],
            [forward.x, forward.y, forward.z],
        );
        let translation = -(rotation * eye);
        let fy = 0.5 * height as f64 / (0.5 * fov_y_degrees.to_radians()).tan();
        Camera {
            rotation,
            translation,
            fx: fy,
            fy,
            cx: 0.5 * width as f64,
            cy: 0.5 * height as f64,
            width,
            height,
            near,
        }
    }

    pub fn eye(&self) -> Vec3 {
        -(self.rotation.transpose() * self.translation)
    }

    #[inline]
    pub fn to_camera(&self, p: Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// Pixel coordinates and depth; `None` behind the near plane.
    pub fn project(&self, p: Vec3) -> Option<([f64; 2], f64)> {
        let q = self.to_camera(p);
        if q.z < self.near {
            return None;
        }
        Some((
            [
                self.fx * q.x / q.z + self.cx,
                self.fy * q.y / q.z + self.cy,
            ],
            q.z,
        ))
    }

    /// World point of a pixel at the given camera-space depth.
    pub fn unproject(&self, pixel: [f64; 2], depth: f64) -> Vec3 {
        let q = Vec3::new(
            (pixel[0] - self.cx) / self.fx * depth,
            (pixel[1] - self.cy) / self.fy * depth,
            depth,
        );
        self.rotation.transpose() * (q - self.translation)
    }

    /// Unit world-space direction through a pixel center.
    pub fn ray_dir(&self, pixel: [f64; 2]) -> Vec3 {
        let q = Vec3::new(
            (pixel[0] - self.cx) / self.fx,
            (pixel[1] - self.cy) / self.fy,
            1.0,
        );
        (self.rotation.transpose() * q)
            .normalized(0.0)
            .expect("ray direction is never zero")
    }

    /// Same pose and field of view at `factor` times the resolution.
    pub fn scaled(&self, factor: usize) -> Camera {
        let f = factor as f64;
        Camera {
            rotation: self.rotation,
            translation: self.translation,
            fx: self.fx * f,
            fy: self.fy * f,
            cx: self.cx * f,
            cy: self.cy * f,
            width: self.width * factor,
            height: self.height * factor,
            near: self.near,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe() -> Camera {
        Camera::look_at(
            Vec3::new(0.0, 1.0, -3.0),
            Vec3::new(0.0, 0.5, 0.0),
            Vec3::Y,
            50.0,
            320,
            240,
            0.01,
        )
    }

    #[test]
    fn target_projects_to_image_center() {
        let cam = probe();
        let (px, depth) = cam.project(Vec3::new(0.0, 0.5, 0.0)).unwrap();
        assert!((px[0] - 160.0).abs() < 1e-9);
        assert!((px[1] - 120.0).abs() < 1e-9);
        assert!(depth > 0.0);
    }

    #[test]
    fn behind_camera_is_culled() {
        let cam = probe();
        assert!(cam.project(Vec3::new(0.0, 1.0, -5.0)).is_none());
    }

    #[test]
    fn unproject_round_trips() {
        let cam = probe();
        let p = Vec3::new(0.3, 0.8, 1.2);
        let (px, depth) = cam.project(p).unwrap();
        let back = cam.unproject(px, depth);
        assert!((back - p).norm() < 1e-9);
    }

    #[test]
    fn rotation_is_orthonormal() {
        let cam = probe();
        let should_be_identity = cam.rotation * cam.rotation.transpose();
        let err: f64 = should_be_identity
            .m
            .iter()
            .zip(Mat3::IDENTITY.m.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-12);
        assert!((cam.rotation.determinant() - 1.0).abs() < 1e-12);
    }
}

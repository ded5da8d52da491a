/// One composited render layer: premultiplied color, coverage, and
/// alpha-weighted mean depth per pixel (`+inf` where nothing landed).
#[derive(Debug, Clone)]
pub struct RenderLayer {
    pub width: usize,
    pub height: usize,
    pub color: Vec<[f32; 3]>,
    pub alpha: Vec<f32>,
    pub depth: Vec<f32>,
}

impl RenderLayer {
    pub fn new(width: usize, height: usize) -> Self {
        RenderLayer {
            width,
            height,
            color: vec![[0.0; 3]; width * height],
            alpha: vec![0.0; width * height],
            depth: vec![f32::INFINITY; width * height],
        }
    }
}

/// Per-camera output stack for one frame.
#[derive(Debug, Clone)]
pub struct FrameBuffers {
    pub width: usize,
    pub height: usize,
    /// Final composited color.
    pub color: Vec<[f32; 3]>,
    /// Alpha-weighted geometry depth (solids and fluid merged).
    pub depth: Vec<f32>,
    /// Additive fluid thickness.
    pub thickness: Vec<f32>,
    /// Post-curve foam intensity in `[0, 1]`.
    pub foam: Vec<f32>,
    /// Shadow factor in `[0, 1]` (1 = fully lit).
    pub shadow: Vec<f32>,
}

impl FrameBuffers {
    pub fn new(width: usize, height: usize) -> Self {
        let n = width * height;
        FrameBuffers {
            width,
            height,
            color: vec![[0.0; 3]; n],
            depth: vec![f32::INFINITY; n],
            thickness: vec![0.0; n],
            foam: vec![0.0; n],
            shadow: vec![1.0; n],
        }
    }
}

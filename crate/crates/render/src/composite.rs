use crate::buffers::RenderLayer;
use crate::image::ImageRgb;
use crate::RenderError;

/// Final per-pixel combination: fluid over solids over background
/// (premultiplied alpha), multiplied by the shadow factor, then blended
/// toward white by the foam intensity. Output channels clamp to `[0, 1]`.
pub fn composite(
    background: &ImageRgb,
    solids: &RenderLayer,
    fluid: &RenderLayer,
    foam: &[f32],
    shadow: &[f32],
) -> Result<ImageRgb, RenderError> {
    let (w, h) = (background.width, background.height);
    for (lw, lh) in [
        (solids.width, solids.height),
        (fluid.width, fluid.height),
    ] {
        if (lw, lh) != (w, h) {
            return Err(RenderError::DimensionMismatch(lw, lh, w, h));
        }
    }
    if foam.len() != w * h || shadow.len() != w * h {
        return Err(RenderError::DimensionMismatch(foam.len(), shadow.len(), w, h));
    }

    let mut out = ImageRgb::new(w, h);
    for i in 0..w * h {
        let bg = background.data[i];
        let mut px = [0.0f32; 3];
        for c in 0..3 {
            let solid_over_bg = solids.color[i][c] + (1.0 - solids.alpha[i]) * bg[c];
            let v = fluid.color[i][c] + (1.0 - fluid.alpha[i]) * solid_over_bg;
            let v = v * shadow[i];
            let v = v + foam[i] * (1.0 - v);
            px[c] = v.clamp(0.0, 1.0);
        }
        out.data[i] = px;
    }
    Ok(out)
}

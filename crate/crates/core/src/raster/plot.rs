use super::canvas::Canvas;
use super::ticks::{expand_degenerate, format_tick, log_ticks, nice_ticks};
use super::{PlotImage, PlotSpec, TimeSeries, XScale};
use crate::error::{Error, Result};

/// The axes rectangle in pixel coordinates (row 0 at the top).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxesBox {
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub bottom: f64,
}

impl AxesBox {
    pub fn of(spec: &PlotSpec) -> Self {
        let (l, r, b, t) = spec.axes_box;
        let (w, h) = (spec.width_px as f64, spec.height_px as f64);
        AxesBox {
            left: l * w,
            right: r * w,
            top: (1.0 - t) * h,
            bottom: (1.0 - b) * h,
        }
    }
}

/// Visible data ranges, in data units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

fn axis_x(t: f64, scale: XScale) -> Result<f64> {
    match scale {
        XScale::Linear => Ok(t),
        XScale::Log10 if t > 0.0 => Ok(t.log10()),
        XScale::Log10 => Err(Error::InvalidArgument(format!(
            "log-scale x axis needs positive time, got {t}"
        ))),
    }
}

/// Affine map of a data point into the axes box; `y` grows downwards.
pub fn data_to_pixel(point: (f64, f64), limits: &Limits, spec: &PlotSpec) -> Result<(f64, f64)> {
    let b = AxesBox::of(spec);
    let x0 = axis_x(limits.x.0, spec.x_scale)?;
    let x1 = axis_x(limits.x.1, spec.x_scale)?;
    let (y0, y1) = limits.y;
    if !(x1 > x0) || !(y1 > y0) {
        return Err(Error::InvalidArgument(format!("degenerate limits {limits:?}")));
    }
    let x = axis_x(point.0, spec.x_scale)?;
    let px = b.left + (x - x0) / (x1 - x0) * (b.right - b.left);
    let py = b.bottom - (point.1 - y0) / (y1 - y0) * (b.bottom - b.top);
    Ok((px, py))
}

fn padded(lo: f64, hi: f64, margin: f64) -> (f64, f64) {
    if lo == hi {
        expand_degenerate(lo, hi)
    } else {
        let pad = margin * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Limits covering every finite point of every series, padded by the data
/// margin (in log space for a log axis).
pub fn auto_limits(series: &[TimeSeries], spec: &PlotSpec) -> Result<Limits> {
    let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
    let mut yr = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for (t, y) in s.points() {
            if !y.is_finite() || !t.is_finite() {
                continue;
            }
            let x = axis_x(t, spec.x_scale)?;
            xr = (xr.0.min(x), xr.1.max(x));
            yr = (yr.0.min(y), yr.1.max(y));
        }
    }
    if !xr.0.is_finite() {
        return Err(Error::InvalidArgument("no finite points to plot".into()));
    }
    let (x0, x1) = padded(xr.0, xr.1, spec.data_margin);
    let (y0, y1) = padded(yr.0, yr.1, spec.data_margin);
    let x = match spec.x_scale {
        XScale::Linear => (x0, x1),
        XScale::Log10 => (10f64.powf(x0), 10f64.powf(x1)),
    };
    Ok(Limits { x, y: (y0, y1) })
}

fn inside(v: f64, (lo, hi): (f64, f64)) -> bool {
    let tol = 1e-9 * (hi - lo).abs();
    v >= lo - tol && v <= hi + tol
}

/// Renders all series into one plot: white canvas, series strokes in palette
/// order, axes frame, outward ticks and numeric tick labels on both axes.
pub fn render_plot(series: &[TimeSeries], spec: &PlotSpec) -> Result<PlotImage> {
    spec.validate()?;
    if series.is_empty() {
        return Err(Error::InvalidArgument("nothing to plot: empty series list".into()));
    }
    for s in series {
        s.validate()?;
        if s.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "series {:?} has {} points; at least 2 are needed",
                s.name,
                s.len()
            )));
        }
        if s.values.iter().all(|v| v.is_nan()) {
            return Err(Error::InvalidArgument(format!("series {:?} is all NaN", s.name)));
        }
        if spec.x_scale == XScale::Log10 {
            if let Some((t, _)) = s.points().find(|&(t, _)| !(t > 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "series {:?}: log-scale x axis needs positive time, got {t}",
                    s.name
                )));
            }
        }
    }
    let limits = auto_limits(series, spec)?;
    let axes = AxesBox::of(spec);
    let mut canvas = Canvas::new(spec.width_px, spec.height_px, spec.background);

    for (i, s) in series.iter().enumerate() {
        let pts = s
            .points()
            .map(|(t, y)| {
                if t.is_finite() && y.is_finite() {
                    data_to_pixel((t, y), &limits, spec)
                } else {
                    Ok((f64::NAN, f64::NAN))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        canvas.draw_polyline(&pts, spec.palette[i % spec.palette.len()], spec.line_width_px);
    }

    let frame = [
        (axes.left, axes.bottom),
        (axes.right, axes.bottom),
        (axes.right, axes.top),
        (axes.left, axes.top),
        (axes.left, axes.bottom),
    ];
    canvas.draw_polyline(&frame, spec.axis_color, spec.axis_line_width_px);

    let x_ticks = match spec.x_scale {
        XScale::Linear => nice_ticks(limits.x.0, limits.x.1, spec.tick_target.0),
        XScale::Log10 => log_ticks(limits.x.0, limits.x.1),
    };
    let y_ticks = nice_ticks(limits.y.0, limits.y.1, spec.tick_target.1);
    let x_visible = match spec.x_scale {
        XScale::Linear => limits.x,
        XScale::Log10 => (limits.x.0.log10(), limits.x.1.log10()),
    };
    let label_gap = spec.tick_length_px + spec.tick_pad_px;

    for t in x_ticks {
        let axis_t = match spec.x_scale {
            XScale::Linear => t,
            XScale::Log10 => t.log10(),
        };
        if !inside(axis_t, x_visible) {
            continue;
        }
        let (px, _) = data_to_pixel((t, limits.y.0), &limits, spec)?;
        canvas.draw_polyline(
            &[(px, axes.bottom), (px, axes.bottom + spec.tick_length_px)],
            spec.axis_color,
            spec.axis_line_width_px,
        );
        let text = format_tick(t);
        let (w, _) = Canvas::label_size(&text);
        let x = (px - w as f64 / 2.0).round() as i64;
        let y = (axes.bottom + label_gap).round() as i64;
        canvas.draw_label(&text, x, y, spec.axis_color)?;
    }
    for v in y_ticks {
        if !inside(v, limits.y) {
            continue;
        }
        let (_, py) = data_to_pixel((limits.x.0, v), &limits, spec)?;
        canvas.draw_polyline(
            &[(axes.left - spec.tick_length_px, py), (axes.left, py)],
            spec.axis_color,
            spec.axis_line_width_px,
        );
        let text = format_tick(v);
        let (w, h) = Canvas::label_size(&text);
        let x = (axes.left - label_gap - w as f64).round() as i64;
        let y = (py - h as f64 / 2.0).round() as i64;
        canvas.draw_label(&text, x, y, spec.axis_color)?;
    }

    Ok(PlotImage {
        pixels: canvas.pixels,
        spec: spec.clone(),
    })
}


#[cfg(test)]
mod tests {
    use super::*;

    fn limits() -> Limits {
        Limits {
            x: (0.0, 10.0),
            y: (-1.0, 3.0),
        }
    }

    #[test]
    fn left_edge_and_vertical_centre() {
        let spec = PlotSpec::default();
        let b = AxesBox::of(&spec);
        let (x, _) = data_to_pixel((0.0, 0.0), &limits(), &spec).unwrap();
        assert_eq!(x, b.left);
        let (_, y) = data_to_pixel((5.0, 1.0), &limits(), &spec).unwrap();
        assert!((y - (b.top + b.bottom) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn log_midpoint() {
        let spec = PlotSpec::log_x();
        let b = AxesBox::of(&spec);
        let l = Limits {
            x: (1.0, 100.0),
            y: (0.0, 1.0),
        };
        let (x, _) = data_to_pixel((10.0, 0.5), &l, &spec).unwrap();
        assert!((x - (b.left + b.right) / 2.0).abs() < 1e-9);
        assert!(data_to_pixel((0.0, 0.5), &l, &spec).is_err());
        assert!(data_to_pixel((-3.0, 0.5), &l, &spec).is_err());
    }

    #[test]
    fn render_errors() {
        let spec = PlotSpec::default();
        assert!(render_plot(&[], &spec).is_err());
        let nan = TimeSeries::new("x", vec![f64::NAN; 5]);
        assert!(render_plot(&[nan], &spec).is_err());
        let idx = TimeSeries::new("x", vec![1.0, 2.0, 3.0]);
        assert!(render_plot(&[idx], &PlotSpec::log_x()).is_err());
    }

    #[test]
    fn constant_series_uses_expanded_limits() {
        let s = TimeSeries::new("c", vec![5.0; 10]);
        let l = auto_limits(&[s.clone()], &PlotSpec::default()).unwrap();
        assert_eq!(l.y, (4.5, 5.5));
        let img = render_plot(&[s], &PlotSpec::default()).unwrap();
        assert_eq!(img.pixels.len(), 432 * 288 * 3);
    }
}

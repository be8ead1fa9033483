use std::path::{Path, PathBuf};

use clonedetect_core::{
    plant_clone, synth_base, ForgerySpec, Origin, Rect, Shape, Sidecar, Texture,
};

use crate::{create_parent, write_file, CliError, CliResult, ForgeArgs};

fn numbers<const N: usize>(s: &str, sep: char, what: &str) -> Result<[usize; N], String> {
    let parts: Vec<&str> = s.split(sep).map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {what}, got '{s}'"));
    }
    let mut out = [0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p
            .parse()
            .map_err(|_| format!("'{p}' is not a non-negative integer"))?;
    }
    Ok(out)
}

pub fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let [w, h] = numbers(&s.to_ascii_lowercase(), 'x', "WxH")?;
    Ok((w, h))
}

pub fn parse_rect(s: &str) -> Result<Rect, String> {
    let [x, y, w, h] = numbers(s, ',', "X,Y,W,H")?;
    Ok(Rect::new(x, y, w, h))
}

pub fn parse_point(s: &str) -> Result<Origin, String> {
    let [x, y] = numbers(s, ',', "X,Y")?;
    Ok(Origin::new(x, y))
}

pub fn parse_texture(s: &str) -> Result<Texture, String> {
    match s.split_once(':') {
        None if s == "noise" => Ok(Texture::Noise),
        None if s == "gradient" => Ok(Texture::Gradient),
        None if s == "tiled" => Ok(Texture::Tiled { period: 8 }),
        Some(("tiled", p)) => match p.parse() {
            Ok(period) if period > 0 => Ok(Texture::Tiled { period }),
            _ => Err(format!("bad tile period '{p}'")),
        },
        _ => Err(format!(
            "unknown texture '{s}' (noise, gradient, tiled[:PERIOD])"
        )),
    }
}

pub fn parse_shape(s: &str) -> Result<Shape, String> {
    match s {
        "rect" => Ok(Shape::Rect),
        "ellipse" => Ok(Shape::Ellipse),
        _ => Err(format!("unknown shape '{s}' (rect, ellipse)")),
    }
}

/// `fixture.png` -> `fixture.truth.json`
pub fn sidecar_path(image: &Path) -> PathBuf {
    let stem = image.file_stem().unwrap_or_default().to_string_lossy();
    image.with_file_name(format!("{stem}.truth.json"))
}

pub fn cmd_forge(args: &ForgeArgs) -> CliResult<()> {
    let (w, h) = args.size;
    let spec = ForgerySpec {
        src_rect: args.src,
        dst_origin: args.dst,
        intensity_offset: args.offset,
        shape: args.shape,
        seed: args.seed,
    };
    let invalid = |e: clonedetect_core::Error| CliError::Usage(e.to_string());
    spec.validate(w, h).map_err(invalid)?;
    let base = synth_base(w, h, args.seed, args.texture).map_err(invalid)?;
    let forgery = plant_clone(&base, &spec).map_err(invalid)?;

    create_parent(&args.out)?;
    forgery.image.save_png(&args.out)?;
    let sidecar = Sidecar::new(&spec, args.texture, &forgery);
    let truth = sidecar_path(&args.out);
    let mut text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    text.push('\n');
    write_file(&truth, text.as_bytes())?;

    if forgery.clamped_pixels > 0 {
        eprintln!(
            "note: {} pasted pixels were clamped to [0, 255]",
            forgery.clamped_pixels
        );
    }
    println!("wrote {} and {}", args.out.display(), truth.display());
    Ok(())
}

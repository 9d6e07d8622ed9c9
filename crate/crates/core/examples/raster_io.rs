//! Raster header/payload round trip, 11-bit ingestion and a PNG composite.

use dipan::io::{export_png, ingest_11bit, read_stem, write_stem, Raster};
use dipan::{MsImage, RasterBand, Role};

fn main() -> dipan::Result<()> {
    let dir = std::env::temp_dir().join("dipan_raster_io");
    std::fs::create_dir_all(&dir)?;
    let (h, w) = (64, 96);
    let dn: Vec<u16> = (0..h * w).map(|i| ((i * 37) % 2048) as u16).collect();
    let band = ingest_11bit(h, w, &dn)?;
    println!("11-bit band: min {:.4} max {:.4}", band.stats().min, band.stats().max);

    let bands: Vec<RasterBand> =
        (0..4).map(|b| RasterBand::from_fn(h, w, |y, x| ((x + b * 7) as f64 / w as f64) * (1.0 + (y as f64 / 9.0).sin()) / 2.0)).collect::<dipan::Result<_>>()?;
    let ms = MsImage::new(bands, Role::HrmsRef)?;
    write_stem(&Raster::Ms(ms.clone()), &dir, "gradient")?;
    let back = read_stem(&dir, "gradient")?.into_ms()?;
    // Payloads are f32, so the round trip is exact for f32-representable values.
    let max_err = back.bands().iter().zip(ms.bands()).flat_map(|(a, b)| a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs())).fold(0.0, f64::max);
    println!("round trip max error {max_err:.2e} (f32 payload)");
    export_png(back.bands(), [2, 1, 0], &dir.join("gradient.png"))?;
    println!("wrote {}", dir.display());
    Ok(())
}

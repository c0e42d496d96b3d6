//! Compress to an FCM1 container, decode it, and compare the size with the model's code length.

use fcmtune::codec::{compress, decompress, CompressedContainer};
use fcmtune::fcm::{bitrate, generate, HyperParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = HyperParams::new(4, 0.1)?;
    let seq = generate(&params, 200_000, 9)?;

    let container = compress(&seq, &params)?;
    let bytes = container.to_bytes();
    let back = decompress(&CompressedContainer::from_bytes(&bytes)?)?;
    assert_eq!(back, seq);

    let ideal = bitrate(&seq, &params)?.bits_per_symbol;
    let actual = container.payload_bits() as f64 / seq.len() as f64;
    println!("{} symbols -> {} bytes (header {})", seq.len(), bytes.len(), container.header_len());
    println!("model {ideal:.5} bps, coder {actual:.5} bps, overhead {:.5}", actual - ideal);
    Ok(())
}

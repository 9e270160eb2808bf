//! IQ capture files: one little-endian interleaved f32 I/Q file per stream
//! plus a `key = value` text header.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use super::FrameLayout;

/// What the sidecar header records besides the stream files.
#[derive(Clone, Debug, PartialEq)]
pub struct IqHeader {
    pub sample_rate: f64,
    pub oversample: usize,
    pub rolloff: f64,
    pub filter_span_symbols: usize,
    pub layout: FrameLayout,
}

/// Writes `<stem>_<k>.iq` for every stream and `<stem>.hdr`; returns the
/// paths written, header last.
pub fn write_iq_capture(dir: &Path, stem: &str, streams: &[Vec<Complex64>], header: &IqHeader) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(streams.len() + 1);
    for (k, s) in streams.iter().enumerate() {
        let path = dir.join(format!("{stem}_{k}.iq"));
        let mut w = BufWriter::new(fs::File::create(&path)?);
        for z in s {
            w.write_all(&(z.re as f32).to_le_bytes())?;
            w.write_all(&(z.im as f32).to_le_bytes())?;
        }
        w.flush()?;
        paths.push(path);
    }
    let l = &header.layout;
    let os = header.oversample;
    let text = format!(
        "format = cf32_le\nstreams = {}\nsamples = {}\nsample_rate = {}\noversample = {}\nrolloff = {}\n\
         filter_span_symbols = {}\nfilter_delay_samples = {}\npreamble_start = {}\npreamble_symbols = {}\n\
         training_start = {}\ntraining_symbols = {}\npayload_start = {}\npayload_symbols = {}\n",
        streams.len(),
        streams.first().map_or(0, Vec::len),
        header.sample_rate,
        os,
        header.rolloff,
        header.filter_span_symbols,
        l.tx_delay,
        l.preamble_start() * os,
        l.preamble_symbols,
        l.training_start() * os,
        l.training_symbols,
        l.payload_start() * os,
        l.payload_symbols,
    );
    let hdr = dir.join(format!("{stem}.hdr"));
    fs::write(&hdr, text)?;
    paths.push(hdr);
    Ok(paths)
}

/// Reads one stream written by [`write_iq_capture`].
pub fn read_iq_stream(path: &Path) -> io::Result<Vec<Complex64>> {
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "IQ file length is not a multiple of 8 bytes"));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re.into(), im.into())
        })
        .collect())
}

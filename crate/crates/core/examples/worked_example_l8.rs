//! The l=8 worked example: build the header for marker 10001110 with k=3,
//! place it in a window at offset 4 and print every correlator score.

use framesync::bitvec::BitVec;
use framesync::correlator::{correlate_window, select_max, WindowState};
use framesync::framing::{build_header, Marker};

fn main() -> framesync::Result<()> {
    let marker = Marker::from_text("10001110")?;
    let k = 3;
    let header = build_header(&marker, k)?;
    println!("marker  {}", marker.bits());
    println!("header  {header}  (c | b | a)");

    let mut reg = BitVec::from_text("0")?;
    reg.extend_from(&header);
    reg.push(false);
    let window = WindowState::from_bits(reg)?;
    println!("window  {}", window.bits());

    let sums = correlate_window(&window, &marker)?;
    for (m, s) in sums.iter().enumerate() {
        println!(
            "  m={m}  sum={s}{}",
            if *s == 8 { "  <- full match" } else { "" }
        );
    }
    let (sum_m, m) = select_max(&sums);
    println!(
        "selected m={m} sum_m={sum_m}, payload starts at register position {}",
        8 + k + m
    );
    Ok(())
}

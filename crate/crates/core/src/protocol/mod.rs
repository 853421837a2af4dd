// Copyright 2026 The awgsim Authors
// SPDX-License-Identifier: Apache-2.0

//! Host control plane: framed binary commands over TCP, a UDP status
//! broadcast, the board-side handler and a client library. All integers on
//! the wire are little-endian.

pub mod board;
pub mod client;
pub mod frame;
pub mod registers;
pub mod server;
pub mod status;

pub use board::{Board, BoardSnapshot};
pub use client::{CaptureSpec, Client, ClientError, Loopback, Tcp, Transport};
pub use frame::{
    parse_frame, serialize_frame, Decoded, Decoder, Frame, Opcode, ParseError, Status,
};
pub use server::{
    ingest, shared, SharedBoard, StatusSender, TcpServer, DEFAULT_COMMAND_PORT, DEFAULT_STATUS_PORT,
};
pub use status::{ChannelReport, StatusPacket};

/// A client talking to a fresh in-process board.
pub fn loopback_client(board: Board) -> Client<Loopback> {
    Client::new(Loopback::new(shared(board)))
}

pub mod gir;

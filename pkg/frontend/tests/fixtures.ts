/** Mask PNG fixtures produced by the server's writer. */

// 6x4, ids 1 and 2.
export const MASK_6X4_B64 =
  "iVBORw0KGgoAAAANSUhEUgAAAAYAAAAECAMAAACa2r5xAAAAF3RFWHR0cmFja2FueTpvYmplY3RfaWRzADEsMnVQWOUAAAMAUExURQAAAIAAAACAAICAAAAAgIAAgACAgICAgEAAAMAAAECAAMCAAEAAgMAAgECAgMCAgABAAIBAAADAAIDAAABAgIBAgADAgIDAgEBAAMBAAEDAAMDAAEBAgMBAgEDAgMDAgAAAQIAAQACAQICAQAAAwIAAwACAwICAwEAAQMAAQECAQMCAQEAAwMAAwECAwMCAwABAQIBAQADAQIDAQABAwIBAwADAwIDAwEBAQMBAQEDAQMDAQEBAwMBAwEDAwMDAwCAAAKAAACCAAKCAACAAgKAAgCCAgKCAgGAAAOAAAGCAAOCAAGAAgOAAgGCAgOCAgCBAAKBAACDAAKDAACBAgKBAgCDAgKDAgGBAAOBAAGDAAODAAGBAgOBAgGDAgODAgCAAQKAAQCCAQKCAQCAAwKAAwCCAwKCAwGAAQOAAQGCAQOCAQGAAwOAAwGCAwOCAwCBAQKBAQCDAQKDAQCBAwKBAwCDAwKDAwGBAQOBAQGDAQODAQGBAwOBAwGDAwODAwAAgAIAgAACgAICgAAAggIAggACggICggEAgAMAgAECgAMCgAEAggMAggECggMCggABgAIBgAADgAIDgAABggIBggADggIDggEBgAMBgAEDgAMDgAEBggMBggEDggMDggAAgQIAgQACgQICgQAAgwIAgwACgwICgwEAgQMAgQECgQMCgQEAgwMAgwECgwMCgwABgQIBgQADgQIDgQABgwIBgwADgwIDgwEBgQMBgQEDgQMDgQEBgwMBgwEDgwMDgwCAgAKAgACCgAKCgACAggKAggCCggKCggGAgAOAgAGCgAOCgAGAggOAggGCggOCggCBgAKBgACDgAKDgACBggKBggCDggKDggGBgAOBgAGDgAODgAGBggOBggGDggODggCAgQKAgQCCgQKCgQCAgwKAgwCCgwKCgwGAgQOAgQGCgQOCgQGAgwOAgwGCgwOCgwCBgQKBgQCDgQKDgQCBgwKBgwCDgwKDgwGBgQOBgQGDgQODgQGBgwOBgwGDgwODgwJrusUYAAAAYSURBVHicY2BgYGRkYACREJqBiYkJSgEAANUAE/gj6z4AAAAASUVORK5CYII=";

export const MASK_6X4_INDICES = [
  0, 0, 1, 1, 0, 0,
  0, 1, 1, 1, 1, 0,
  0, 0, 0, 2, 2, 2,
  0, 0, 0, 2, 2, 2,
];

// 31x24 random map with ids 1..3 (exercises PNG row filters).
export const MASK_31X24_B64 =
  "iVBORw0KGgoAAAANSUhEUgAAAB8AAAAYCAMAAAA1ddazAAAAGXRFWHR0cmFja2FueTpvYmplY3RfaWRzADEsMiwzgYGzeAAAAwBQTFRFAAAAgAAAAIAAgIAAAACAgACAAICAgICAQAAAwAAAQIAAwIAAQACAwACAQICAwICAAEAAgEAAAMAAgMAAAECAgECAAMCAgMCAQEAAwEAAQMAAwMAAQECAwECAQMCAwMCAAABAgABAAIBAgIBAAADAgADAAIDAgIDAQABAwABAQIBAwIBAQADAwADAQIDAwIDAAEBAgEBAAMBAgMBAAEDAgEDAAMDAgMDAQEBAwEBAQMBAwMBAQEDAwEDAQMDAwMDAIAAAoAAAIIAAoIAAIACAoACAIICAoICAYAAA4AAAYIAA4IAAYACA4ACAYICA4ICAIEAAoEAAIMAAoMAAIECAoECAIMCAoMCAYEAA4EAAYMAA4MAAYECA4ECAYMCA4MCAIABAoABAIIBAoIBAIADAoADAIIDAoIDAYABA4ABAYIBA4IBAYADA4ADAYIDA4IDAIEBAoEBAIMBAoMBAIEDAoEDAIMDAoMDAYEBA4EBAYMBA4MBAYEDA4EDAYMDA4MDAACAAgCAAAKAAgKAAACCAgCCAAKCAgKCAQCAAwCAAQKAAwKAAQCCAwCCAQKCAwKCAAGAAgGAAAOAAgOAAAGCAgGCAAOCAgOCAQGAAwGAAQOAAwOAAQGCAwGCAQOCAwOCAACBAgCBAAKBAgKBAACDAgCDAAKDAgKDAQCBAwCBAQKBAwKBAQCDAwCDAQKDAwKDAAGBAgGBAAOBAgOBAAGDAgGDAAODAgODAQGBAwGBAQOBAwOBAQGDAwGDAQODAwODAICAAoCAAIKAAoKAAICCAoCCAIKCAoKCAYCAA4CAAYKAA4KAAYCCA4CCAYKCA4KCAIGAAoGAAIOAAoOAAIGCAoGCAIOCAoOCAYGAA4GAAYOAA4OAAYGCA4GCAYOCA4OCAICBAoCBAIKBAoKBAICDAoCDAIKDAoKDAYCBA4CBAYKBA4KBAYCDA4CDAYKDA4KDAIGBAoGBAIOBAoOBAIGDAoGDAIODAoODAYGBA4GBAYOBA4OBAYGDA4GDAYODA4ODAmu6xRgAAAQ5JREFUeJw9kgEWwzAIQlXuf+fBJ1332sxEETAj7cz41c1KmvU6mtM4OB/lbOa87w8Bv527c3hek5dVulTurnGMZASSN1gbqCx+3HWv8Aa+6eMdx+yngdHhFjCn5w279CjIUJgDU28ggOgcBdDaUCrlnlaRUlTdj16IRBZ2pCPnga4gOlrjPMJqO7Gi7bXCrLKPTynJUQS0ZCv3eX8UiZ3QO5KflKcDaLq4CoYXjsARTOToDjMg/JxKtuquXmBwtuJEbKZK5bZX5J3/zSjzJXtBijxDRE4motrmnYLoG0N9hGgaMVLNN1l4MWksjIa/95qPCzF/r1Wfv3ouBuIJ4C7gQj1GhB7rjpEWy1V18AP/0QNGyxRQcQAAAABJRU5ErkJggg==";

export const MASK_31X24_COUNTS: Record<number, number> = { 0: 312, 1: 171, 2: 117, 3: 144 };

package main

import "fmt"

func main() {
	ch := make(chan int)
	go func() {
		for {
			fmt.Println("looping")
		}
	}()
	<-ch
}
